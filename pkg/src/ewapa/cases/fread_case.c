/* Sequential read workload: fopen the input, fread it to EOF in fixed-size
 * chunks, fclose. Prints the byte total so a truncated run is detectable.
 *
 * Usage: fread_case <input-file> <chunk-bytes>
 */
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv)
{
    FILE *fp;
    char *buf;
    size_t chunk, got;
    unsigned long long total = 0;

    if (argc != 3) {
        fprintf(stderr, "usage: %s <input-file> <chunk-bytes>\n", argv[0]);
        return 2;
    }
    chunk = (size_t)strtoul(argv[2], NULL, 10);
    if (chunk == 0) {
        fprintf(stderr, "chunk must be positive\n");
        return 2;
    }
    buf = malloc(chunk);
    if (!buf) {
        fprintf(stderr, "out of memory\n");
        return 1;
    }
    fp = fopen(argv[1], "rb");
    if (!fp) {
        perror("fopen");
        free(buf);
        return 1;
    }
    while ((got = fread(buf, 1, chunk, fp)) > 0)
        total += got;
    fclose(fp);
    free(buf);
    printf("%llu\n", total);
    return 0;
}
