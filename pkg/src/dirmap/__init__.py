"""dirmap: directional grid maps for angular motion in dynamic environments.

A spatial grid whose cells each hold a von Mises (or von Mises mixture)
distribution over motion direction, fitted from trajectory headings, plus
the supporting machinery: circular statistics, EM with density-based
initialization, synthetic scenes with ground truth, evaluation metrics,
and polar-plot SVG export.
"""

from .circular import (
    KAPPA_MAX,
    CircularStats,
    VonMises,
    VonMisesFit,
    bessel_i0,
    bessel_i1,
    bessel_ratio,
    circular_stats,
    fit_vm,
    inverse_bessel_ratio,
    log_bessel_i0,
    vm_log_likelihood,
    wrap_angle,
)
from .gridmap import (
    CellModel,
    DgmFormatError,
    DirectionalGridMap,
    GridSpec,
    SiteSet,
    build,
    build_at_sites,
    from_text,
    load,
    save,
    to_text,
    update_online,
)
from .metrics import (
    MetricReport,
    apd_cv,
    compare,
    compare_on_grid,
    enll,
    kl_divergence,
    mse_closest_mode,
)
from .mixture import (
    EmConfig,
    EmReport,
    MixtureComponent,
    VonMisesMixture,
    circular_dbscan,
    find_modes,
    fit_vmm,
    init_clusters,
    m_step,
    refit_vmm,
    responsibilities,
    sample_mixture,
)
from .plotting import PlotSpec, render_map_svg
from .scenes import Scene, SceneSpec, SegmentTruth, generate
from .sphere import (
    VonMisesFisher,
    VonMisesFisherFit,
    fit_vmf,
    fit_vmf_mixture,
    sample_vmf,
)
from .trajectories import (
    LoadError,
    Observation,
    ObservationStore,
    TrackPoint,
    headings_from_track,
    load_csv,
    write_track_csv,
)

__version__ = "0.1.0"
