#include <stdio.h>
#include <string.h>
#include "memtier.h"

#define CHECK(x)                                                   \
    do {                                                           \
        MtStatus s_ = (x);                                         \
        if (s_ != MT_STATUS_OK) {                                  \
            fprintf(stderr, "%s -> %d: %s\n", #x, (int)s_,         \
                    mt_last_error() ? mt_last_error() : "?");      \
            return 1;                                              \
        }                                                          \
    } while (0)

int main(void) {
    const char *cfg =
        "[workload]\nkind = mmap-bench\n"
        "[mmap_bench]\ntotal_bytes = 1048576\nhot_bytes = 65536\nn_accesses = 5000\n";
    MtTrace *t = NULL;
    CHECK(mt_trace_generate(cfg, &t));
    if (mt_trace_len(t) != 5000) return 2;

    uint8_t *buf = NULL;
    size_t len = 0;
    CHECK(mt_trace_encode(t, MT_ENCODING_VARLEN, &buf, &len));
    MtTrace *u = NULL;
    CHECK(mt_trace_decode(buf, len, &u));
    mt_bytes_free(buf, len);
    for (size_t i = 0; i < mt_trace_len(t); i++) {
        MtRecord a, b;
        CHECK(mt_trace_get(t, i, &a));
        CHECK(mt_trace_get(u, i, &b));
        if (a.timestamp_ns != b.timestamp_ns || a.phys_addr != b.phys_addr || a.op != b.op) return 3;
    }
    MtRecord r;
    if (mt_trace_get(t, 5000, &r) != MT_STATUS_OUT_OF_RANGE) return 4;
    mt_trace_free(u);
    mt_trace_free(t);

    uint64_t page = 0;
    CHECK(mt_page_of(262144, 4096, &page));
    if (page != 64) return 5;
    if (mt_page_of(1, 1000, &page) != MT_STATUS_CONFIG) return 6;

    char *json = NULL;
    CHECK(mt_experiment_run(cfg, &json));
    if (!strstr(json, "\"accuracy\": 1.0000")) return 7;
    mt_string_free(json);
    printf("ok %s\n", mt_version());
    return 0;
}
