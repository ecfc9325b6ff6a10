#include <math.h>
#include <stdio.h>
#include "ddibench.h"

int main(int argc, char **argv) {
    if (argc < 2) {
        fprintf(stderr, "usage: smoke CATALOG.tsv\n");
        return 2;
    }
    DdiCatalog *catalog = NULL;
    if (ddi_catalog_load(argv[1], "tabular", &catalog) != DDI_STATUS_OK) {
        char *msg = ddi_last_error();
        fprintf(stderr, "load failed: %s\n", msg ? msg : "?");
        ddi_string_free(msg);
        return 1;
    }
    char *system_text = NULL;
    char *user_text = NULL;
    DdiStatus st = ddi_render_prompt(catalog, "GD001", "GD002", &system_text, &user_text);
    if (st == DDI_STATUS_OK) {
        printf("%s\n", user_text);
    }
    ddi_string_free(system_text);
    ddi_string_free(user_text);

    DdiMetrics m;
    if (ddi_compute_metrics(8, 2, 7, 3, &m) == DDI_STATUS_OK) {
        printf("accuracy %.3f\n", m.accuracy);
    }
    printf("label %d\n", (int)ddi_parse_label("No interaction."));
    ddi_catalog_free(catalog);
    return st == DDI_STATUS_OK ? 0 : 1;
}
