"""Bilateral matching and gated fusion for sentence-pair relation classification."""

from .config import ModelConfig
from .data import DiscourseInstance, LabelSchema, get_schema, load_dataset
from .encoder import Vocabulary
from .model import BMGFModel
from .tensor import Tensor

__version__ = "0.1.0"

__all__ = ["BMGFModel", "DiscourseInstance", "LabelSchema", "ModelConfig", "Tensor", "Vocabulary",
           "get_schema", "load_dataset"]
