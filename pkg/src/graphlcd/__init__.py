"""Loop-closure detection from semantic scene graphs compared with a Weisfeiler-Lehman kernel."""
from .config import PipelineConfig
from .ingest import Dataset, FrameAnnotation, GroundTruth, load_dataset, validate_dataset
from .scenegraph import build_graph
from .wlkernel import wl_kernel

__version__ = "0.1.0"

__all__ = ["PipelineConfig", "Dataset", "FrameAnnotation", "GroundTruth", "load_dataset",
           "validate_dataset", "build_graph", "wl_kernel"]
