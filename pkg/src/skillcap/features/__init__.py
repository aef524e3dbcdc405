"""Input-feature extraction: complexity kernels, kinetics and the catalog."""

from .catalog import (
    SCHEMES,
    UNGROUPED,
    FeatureCatalog,
    FeatureSpec,
    FeatureVector,
    default_catalog,
    extract_features,
    group_filter,
)
from .complexity import (
    SampEnParams,
    dft_band_features,
    huffman_bits,
    lzw_code_count,
    sample_entropy,
    shannon_entropy,
)
from .inputs import event_frequency_features, kinetics_features

__all__ = [
    "SCHEMES",
    "UNGROUPED",
    "FeatureCatalog",
    "FeatureSpec",
    "FeatureVector",
    "SampEnParams",
    "default_catalog",
    "dft_band_features",
    "event_frequency_features",
    "extract_features",
    "group_filter",
    "huffman_bits",
    "kinetics_features",
    "lzw_code_count",
    "sample_entropy",
    "shannon_entropy",
]
