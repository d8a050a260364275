"""Full-network CNN activation extractor for the visdist pipeline."""

from .extract import ExtractionJob, ExtractionResult, collect_images, run_job
from .model import ARCHITECTURES, prepare

__version__ = "0.1.0"
