"""dubkit: production and evaluation toolkit for movie-dubbing corpora.

Covers the deterministic side of a dubbing-dataset pipeline: subtitle,
diarization and manifest formats, timestamp-speaker tokenization,
alignment loss scorers, flow-matching conditioning with speaker
switching, diarization post-processing, transcript verification, and
the evaluation metric suite. Neural models are external producers whose
outputs are ingested as artifact files.
"""

from dubkit._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
