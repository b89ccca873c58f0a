"""Variability-modeling engine for customizable multi-tenant applications:
OVM domain model, textual DSL, derivation of customization models, tenant
configuration sessions, brute-force analysis, and workflow resolution."""

from .model import (
    AlternativeGroup,
    Constraint,
    ConstraintKind,
    Diagnostic,
    EdgeKind,
    Layer,
    Reference,
    ReferenceKind,
    Severity,
    SourceSpan,
    UnknownIdError,
    VariabilityModel,
    Variant,
    VariantEdge,
    VariationPoint,
    Visibility,
    referenced_by,
    well_formed,
)
from .dsl import ParseError, ParseFailure, SerializeError, parse, serialize
from .derivation import (
    CustomizationModel,
    DerivationError,
    DerivationTrace,
    DeveloperBinding,
    derive,
    replay,
)
from .configurator import (
    ConfiguratorSession,
    Decision,
    PropagationReport,
    SessionError,
    TenantConfiguration,
    complete,
    decide,
    new_session,
    retract,
    validate_configuration,
)
from .analysis import (
    CapExceededError,
    EnumerationResult,
    FullConfiguration,
    UnsupportedModelError,
    dead_variants,
    enumerate_configurations,
    is_void,
)
from .workflow import (
    ActivityGraph,
    ActivityNode,
    Edge,
    GraphFormatError,
    NodeKind,
    WorkflowError,
    apply_configuration,
    graph_to_json,
    load_graph,
    resolve_workflow,
    validate_workflow,
)

__version__ = "0.1.0"
