"""Task alignment of vector representations via hierarchical clustering."""

from .alignment import AlignmentResult, ThasSummary, average_precision, partition_alignment, thas, thas_all_labels, thas_averaged
from .core import CurveSeries, EmbeddedDataset, subsample, subsample_indices, validate_dataset
from .errors import ReprAlignError, ValidationError
from .fewshot import LearningCurveResult, learning_curve, train_logistic
from .hierclust import Dendrogram, PartitionView, cut, naive_agglomerative, partitions, ward_cluster
from .quality import QualityResult, dbi, dbi_curve
from .stats import Cell, CorrelationReport, ReportMatrix, build_report, correlate, pearson, spearman

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult", "Cell", "CorrelationReport", "CurveSeries", "Dendrogram", "EmbeddedDataset",
    "LearningCurveResult", "PartitionView", "QualityResult", "ReportMatrix", "ReprAlignError", "ThasSummary",
    "ValidationError", "average_precision", "build_report", "correlate", "cut", "dbi", "dbi_curve",
    "learning_curve", "naive_agglomerative", "partition_alignment", "partitions", "pearson", "spearman",
    "subsample", "subsample_indices", "thas", "thas_all_labels", "thas_averaged", "train_logistic",
    "validate_dataset", "ward_cluster",
]
