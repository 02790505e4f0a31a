"""Mean-field and Gaussian-fluctuation dynamics of a cavity optomechanical
system coupled to a quantum-dot ensemble with modulated drive and detuning."""

__version__ = "0.1.0"

from .errors import (ConfigError, GridMismatchError, IncommensurateStepError, InstabilityError,
                     NonRealReconstructionError, ParameterError, ResonanceError, SimulationError,
                     UnphysicalStateError)
from .model import ZERO_STATE, MeanFieldState, SystemParams, drive_amplitude, qd_detuning, validate
from .meanfield import (MeanFieldTrajectory, continue_trajectory, detect_limit_cycle, integrate_meanfield,
                        meanfield_rhs, steady_displacement_qs)
from .perturbative import FourierExpansion, expand, higher_order_coeffs, reconstruct, zeroth_order_coeffs
from .covariance import (CovarianceSeries, CovarianceState, default_initial_covariance, diffusion_matrix,
                         drift_matrix, fluctuation_energies, integrate_covariance, phonon_number)
from .entanglement import (EntanglementSeries, TwoModeCovariance, entanglement_timeseries, extract_two_mode,
                           log_negativity, smallest_symplectic_eigenvalue, symplectic_oracle)
