"""Two-level dynamics with a non-Hermitian gain/loss shortcut to adiabaticity."""
from .core import (
    AdiabaticAmplitudes,
    AdiabaticFrame,
    DomainError,
    DriveModel,
    GammaPolicy,
    StateVector,
    WindowError,
    adiabatic_eigenvalues,
    adiabatic_frame,
    adiabatic_hamiltonian,
    adiabatic_state,
    from_adiabatic_basis,
    gamma_shortcut,
    hamiltonian,
    mixing_angle,
    mixing_angle_rate,
    to_adiabatic_basis,
)
from .integrator import (
    IntegrationError,
    QuadratureError,
    SimulationConfig,
    TrajectoryRecord,
    closed_form_a_plus,
    integrate,
    propagator_oracle,
)
from .models import (
    AllenEberly,
    LandauZener,
    ShortcutProfile,
    Tabulated,
    synthesize_profile,
    validate_model,
)
from .analysis import (
    EnergyTrack,
    SignFlipReport,
    TransferReport,
    energy_track,
    parity_integral,
    sign_flip_check,
    transfer_report,
)

__version__ = "0.1.0"
