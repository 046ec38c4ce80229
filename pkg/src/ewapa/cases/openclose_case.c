/* Open/close workload: repeatedly fopen the same file, read one byte, and
 * fclose it, exercising the open and close paths in isolation.
 *
 * Usage: openclose_case <input-file> <loop-count>
 */
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv)
{
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
    for (i = 0; i < loops; i++) {
        FILE *fp = fopen(argv[1], "rb");
        if (!fp) {
            perror("fopen");
            return 1;
        }
        if (fread(&byte, 1, 1, fp) != 1) {
            fprintf(stderr, "input file is empty\n");
            fclose(fp);
            return 1;
        }
        fclose(fp);
    }
    return 0;
}
