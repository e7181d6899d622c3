# global defaults
NUM_APS = 4
NUM_ANTENNAS = 64
# NUM_ANTENNAS = 16     # the communication-overhead remark assumes 16
NUM_USERS = 4
NOISE_POWER = 1.0
SNR_DB = 20.0           # beta / sigma^2
SINR_TARGET_DB = 15.0
RELAXATION_FACTOR = 1.0
PENALTY = 10.0
MAX_ITERS = 10
PRIMAL_TOL = 1e-4       # absolute part of the primal stopping threshold
DUAL_TOL = 1e-4         # absolute part of the dual stopping threshold
REL_TOL = 1e-3
SOLVER_TOL = 1e-7
SOLVER_MAX_ITERS = 200
N_REALIZATIONS = 100
SEED = 42

# conjugate beamforming sweep, total transmit SNR in dB
POWER_GRID_DB = tuple(range(0, 62, 2))

# an ensemble aborts once more than this share of realizations fail
FAILURE_LIMIT = 0.10

MAX_WORKERS_ENV = 'CELLFREE_MAX_WORKERS'
RESULTS_SCHEMA_VERSION = 1
OUTPUT_DIR = 'results'

# relative slack when testing achieved SINR against its target in outage counts
OUTAGE_SLACK = 1e-4
