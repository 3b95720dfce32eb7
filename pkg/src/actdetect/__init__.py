"""actdetect: household activity detection and behavioral modeling from
minute-level smart-meter load data."""

__version__ = "0.1.0"

from .activity_model import (
    ActivitySet,
    HourlyProfile,
    TransitionMatrix,
    build_state_sequence,
    estimate_transition_matrix,
    hourly_distribution,
    stationary_distribution,
)
from .evaluate import (
    AblationResult,
    ConfusionCounts,
    MetricsReport,
    ablation_run,
    confusion,
    metrics,
    split,
    timeline_export,
)
from .features import (
    FeatureMatrix,
    Scaler,
    amplitude_spectrum,
    assemble,
    dft,
    standardize,
    time_domain_features,
)
from .ingest import (
    ActivityMap,
    AlignedData,
    LabelSeries,
    LoadTable,
    TemperatureSeries,
    WindowRecord,
    align_and_fill,
    build_windows,
    bundle_activities,
    default_activity_map,
    parse_labels_csv,
    parse_load_csv,
    parse_weather_csv,
    window_labels,
    write_labels_csv,
    write_load_csv,
    write_weather_csv,
)
from .svm import SvmModel, TrainConfig, decision_value, predict, train
from .synth import (
    ApplianceSignature,
    SynthConfig,
    SynthResult,
    cycling_pair,
    default_config,
    generate,
    simulate_state_sequence,
)

__all__ = [name for name in dir() if not name.startswith("_")]
