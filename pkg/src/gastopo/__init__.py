"""gastopo: create, edit, validate and collaboratively extend georeferenced,
graph-consistent gas infrastructure datasets."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Dataset,
    ElementKind,
    GeoPosition,
    InfrastructureElement,
    LayerConfig,
    Node,
    Pipeline,
    PipelineGroup,
    new_dataset,
)
from .project import load_project, save_project  # noqa: F401
from .commands import CommandProcessor, replay_journal  # noqa: F401
from .validation import check_references, compute_statistics, topology_check  # noqa: F401
