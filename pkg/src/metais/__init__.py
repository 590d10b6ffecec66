"""Meta-instance selection: learn which training instances to drop from nearest-neighbor-graph meta-features."""

from .dataset import Dataset, load_any, load_bundled, load_csv, load_keel, standardize, stratified_kfold
from .metafeatures import DEFAULT_K_LIST, MetaDataset, NNGMetaFeatures, extract
from .nng import NeighborGraph, build_graph, knn_query, truncate

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_K_LIST",
    "Dataset",
    "MetaDataset",
    "NNGMetaFeatures",
    "NeighborGraph",
    "build_graph",
    "extract",
    "knn_query",
    "load_any",
    "load_bundled",
    "load_csv",
    "load_keel",
    "standardize",
    "stratified_kfold",
    "truncate",
]
