"""Monte-Carlo transport of wave energy in a randomly heterogeneous slab,
with wavelength-scale interference corrections at the walls and at the
source-aligned interior planes."""

from ._jit import USE_NUMBA
from .config import ConfigError, RunConfig, parse_config
from .interference import (BoundarySignLedger, Factor, ProfileReport, boundary_profile, ledger_for,
                           localization_profile, onset_times)
from .medium import (CorrelationKind, CorrelationModel, MediumSpec, ScatterTable, differential_xsection,
                     power_spectrum, sample_scatter_direction, total_xsection)
from .rng import CounterRNG
from .slab import BoundaryCondition, Particle, SlabConfig
from .source import EnvelopeKind, InitialPulse, SourceSampler, amplitude_A, sample_initial_state
from .tally import EnergyMatrix, TallyGrid, TallyLayout, TallySet, deposit_track, energy_density
from .transport import (NonFiniteTallyError, Problem, coherent_amplitude, fold_into_slab, run_simulation,
                        simulate, step_to_next_event)

__version__ = "0.1.0"
