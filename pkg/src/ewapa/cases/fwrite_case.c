/* Sequential write workload: load a small record file, then fwrite its
 * records one at a time, cycling, until the target byte count is reached.
 * Record boundaries are newline-terminated lines of the input.
 *
 * Usage: fwrite_case <record-file> <output-file> <target-bytes>
 */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define MAX_RECORDS 4096
#define MAX_LINE 4096

int main(int argc, char **argv)
{
    FILE *in, *out;
    static char records[MAX_RECORDS][MAX_LINE];
    static size_t lens[MAX_RECORDS];
    size_t nrec = 0, i = 0;
    unsigned long long target, written = 0;
    char line[MAX_LINE];

    if (argc != 4) {
        fprintf(stderr, "usage: %s <record-file> <output-file> <target-bytes>\n", argv[0]);
        return 2;
    }
    target = strtoull(argv[3], NULL, 10);

    in = fopen(argv[1], "rb");
    if (!in) {
        perror("fopen record file");
        return 1;
    }
    while (nrec < MAX_RECORDS && fgets(line, sizeof line, in)) {
        lens[nrec] = strlen(line);
        memcpy(records[nrec], line, lens[nrec]);
        nrec++;
    }
    fclose(in);
    if (nrec == 0) {
        fprintf(stderr, "record file is empty\n");
        return 1;
    }

    out = fopen(argv[2], "wb");
    if (!out) {
        perror("fopen output");
        return 1;
    }
    while (written < target) {
        size_t want = lens[i];
        if (written + want > target)
            want = (size_t)(target - written);
        if (fwrite(records[i], 1, want, out) != want) {
            perror("fwrite");
            fclose(out);
            return 1;
        }
        written += want;
        i = (i + 1) % nrec;
    }
    fclose(out);
    printf("%llu\n", written);
    return 0;
}
