#include <stdio.h>
#include <string.h>
#include "abqc.h"

int main(void) {
    uint64_t k = 0;
    if (abqc_min_k(2, &k) != ABQC_STATUS_OK || k != 15) return 1;
    if (abqc_min_k(0, &k) != ABQC_STATUS_INVALID_ARGUMENT) return 2;
    if (abqc_last_error_message() == NULL) return 3;

    size_t edges[] = {0, 1};
    AbqcGraph *g = NULL;
    if (abqc_graph_new(2, edges, 1, &g) != ABQC_STATUS_OK) return 4;

    AbqcTranscript *t = NULL;
    if (abqc_run_honest(g, 3, 1, 42, &t) != ABQC_STATUS_OK) return 5;
    AbqcVerdict v;
    if (abqc_transcript_verdict(t, &v) != ABQC_STATUS_OK || v != ABQC_VERDICT_ACCEPTED) return 6;

    char *json = NULL;
    if (abqc_transcript_to_json(t, &json) != ABQC_STATUS_OK || strstr(json, "\"verdict\":\"accepted\"") == NULL) return 7;
    abqc_string_free(json);
    abqc_transcript_free(t);
    abqc_graph_free(g);
    puts("ok");
    return 0;
}
