from vqtk.metrics.frechet import feature_stats, frechet_distance, gaussian_stats, sqrtm_newton_schulz
from vqtk.metrics.inception import check_prob_matrix, inception_score, inception_score_splits, read_prob_matrix
from vqtk.metrics.perplexity import perplexity, perplexity_report
from vqtk.metrics.projection import export_codebook_projection, principal_axes
from vqtk.metrics.usage import code_histogram, codebook_usage

__all__ = [
    "check_prob_matrix",
    "code_histogram",
    "codebook_usage",
    "export_codebook_projection",
    "feature_stats",
    "frechet_distance",
    "gaussian_stats",
    "inception_score",
    "inception_score_splits",
    "perplexity",
    "perplexity_report",
    "principal_axes",
    "read_prob_matrix",
    "sqrtm_newton_schulz",
]
