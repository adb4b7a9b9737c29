"""L2 calibration for computer experiments with binary responses.

Pipeline: fit a penalized kernel logistic regression to binary physical
data, fit a Gaussian-process classification emulator to binary simulation
data, estimate calibration parameters by minimizing the L2 distance
between the two probability surfaces, and report asymptotic sandwich
standard errors plus Sobol sensitivity of the emulator.
"""

from .artifacts import load_model, save_model
from .bench import (BenchReport, BenchScenario, generate_computer,
                    generate_physical, run_naive_comparison, run_table1,
                    run_table2, write_report)
from .calibrate import (CalibrationResult, GridResult, KnnLabelClassifier,
                        L2Objective, StartTrace, calibrate, calibrate_naive,
                        grid_minimize, l2_distance)
from .config import CoordSpec, RunConfig, load_config
from .datasets import ComputerDataset, PhysicalDataset
from .domains import Domain, unit_domain
from .errors import (BincalibError, BoundaryWarning, ConvergenceWarning,
                     DegenerateFoldWarning, ExtrapolationWarning, InputError,
                     NumericalError, OptimizationError, SampleSizeWarning)
from .gpc import CachedPredictor, GpcModel, cv_tune_gpc, fit_gpc, predict_p
from .inference import AsymptoticReport, estimate_V, estimate_W, sandwich
from .io import (read_computer_csv, read_physical_csv, write_computer_csv,
                 write_physical_csv)
from .kernels import (GramMatrix, KernelSpec, backend, cross, eval_kernel,
                      gram, safe_cholesky)
from .klr import KlrModel, cv_tune_klr, fit_klr, predict_eta
from .rng import derive_seed, substream
from .sensitivity import SobolResult, sobol_first_order

__version__ = "0.1.0"
