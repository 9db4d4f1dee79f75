"""sociominer: socio-technical and personality-trait mining of developer e-mail and git history."""

__version__ = "0.1.0"

from .cluster import (ClusterAssignment, JaccardAffinity, KMeans, SpectralClustering,  # noqa: E402
                      SSECurve, TouchMatrix, jaccard_affinity, kmeans, spectral_cluster,
                      sse_sweep, suggest_knee)
from .traits import LexiconTraitScorer  # noqa: E402

__all__ = [
    "ClusterAssignment", "JaccardAffinity", "KMeans", "LexiconTraitScorer", "SSECurve",
    "SpectralClustering", "TouchMatrix", "jaccard_affinity", "kmeans", "spectral_cluster",
    "sse_sweep", "suggest_knee",
]
