"""Text and molecule evaluation metrics."""

from pseudopairs.metrics.frechet import frechet_fp_distance, jacobi_eigh, psd_sqrt
from pseudopairs.metrics.reports import (
    CaptionReport,
    GenerationReport,
    evaluate_captioning,
    evaluate_generation,
    levenshtein,
    write_per_pair_csv,
    write_report_json,
)
from pseudopairs.metrics.text_metrics import bleu_n, lcs_length, meteor_lite, porter_stem, rouge, rouge_l_f1

__all__ = [
    "CaptionReport",
    "GenerationReport",
    "bleu_n",
    "evaluate_captioning",
    "evaluate_generation",
    "frechet_fp_distance",
    "jacobi_eigh",
    "lcs_length",
    "levenshtein",
    "meteor_lite",
    "porter_stem",
    "psd_sqrt",
    "rouge",
    "rouge_l_f1",
    "write_per_pair_csv",
    "write_report_json",
]
