/* Seek workload: jump the read position forward in fixed strides, touching
 * one byte after each seek so the position change is observable.
 * Iteration i seeks to i * 1000000 bytes from the file start.
 *
 * Usage: fseek_case <input-file> <loop-count>
 */
#include <stdio.h>
#include <stdlib.h>

#define STRIDE 1000000L

int main(int argc, char **argv)
{
    FILE *fp;
    long loops, i;
    char byte;

    if (argc != 3) {
        fprintf(stderr, "usage: %s <input-file> <loop-count>\n", argv[0]);
        return 2;
    }
    loops = strtol(argv[2], NULL, 10);
    if (loops <= 0) {
        fprintf(stderr, "loop count must be positive\n");
        return 2;
    }
    fp = fopen(argv[1], "rb");
    if (!fp) {
        perror("fopen");
        return 1;
    }
    for (i = 0; i < loops; i++) {
        if (fseek(fp, i * STRIDE, SEEK_SET) != 0) {
            perror("fseek");
            fclose(fp);
            return 1;
        }
        if (fread(&byte, 1, 1, fp) != 1 && ferror(fp)) {
            perror("fread");
            fclose(fp);
            return 1;
        }
    }
    fclose(fp);
    return 0;
}
