# Fraction of the trajectory averaged for the steady state.
DEFAULT_WINDOW = 0.25

# Two equal windows closer than this are considered settled.
SETTLE_TOLERANCE_DB = 1.0
# Windows whose means are both below this are settled regardless of the dB gap.
SETTLE_FLOOR = 1e-30
STEADY_STATE_BATCHES = 10

# Innovations are pre-drawn per replica in chunks of this many iterations.
CHUNK_STEPS = 512
DEFAULT_BLOCK_SIZE = 25
DEFAULT_REPLICAS = 50
DEFAULT_ITERATIONS = 10_000
DEFAULT_SEED = 0

DEFAULT_EDGE_PROBABILITY = 0.3
GRAPH_ATTEMPTS = 1000
PERRON_TOLERANCE = 1e-12
PERRON_MAX_ITERATIONS = 100_000

# Random stream identifiers mixed into the master seed.
GRAPH_STREAM = 0
REPLICA_STREAM = 1

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_DIVERGED = 3

PRESETS = ("fig1", "fig2", "lms")
