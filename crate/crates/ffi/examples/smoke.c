/* cc examples/smoke.c -Iinclude ../../target/debug/libpaircorr_ffi.a -lpthread -ldl -lm -o smoke */
#include <stdio.h>
#include "paircorr.h"

int main(void) {
    PcSequence *seq = NULL;
    PcPhases *ph = NULL;
    double r2 = 0.0;
    uint64_t count = 0;

    if (pc_sequence_new("geometric:3/2", &seq) != PC_STATUS_OK) goto fail;
    if (pc_phases_new(seq, "1.2345", 1024, 0, &ph) != PC_STATUS_OK) goto fail;
    if (pc_r2_window(ph, 1.0, PC_ALGORITHM_SORTED, &r2) != PC_STATUS_OK) goto fail;
    printf("R2 = %.6f\n", r2);
    if (pc_count_b(seq, 3, "0.2", PC_COUNT_MODE_FAST, &count) != PC_STATUS_OK) goto fail;
    printf("count = %llu\n", (unsigned long long)count);
    if (pc_sequence_new("bogus", &seq) == PC_STATUS_OK) return 1;
    printf("error: %s\n", pc_last_error());
    pc_phases_free(ph);
    pc_sequence_free(seq);
    return 0;
fail:
    fprintf(stderr, "%s\n", pc_last_error());
    return 1;
}
