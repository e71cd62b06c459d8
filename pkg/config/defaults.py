# config/defaults.py

TOOL_NAME = "timemixlab"
TOOL_VERSION = "0.3.0"

# Keys that change how a run executes but never what it computes
EXECUTION_KEYS = ("threads", "output", "progress")

COMMON_DEFAULTS = {
    "base_seed": 42,                 # root of every RandomStream in the run
    "threads": 1,                    # worker threads (TIMEMIXLAB_THREADS wins)
    "progress": False,               # tqdm progress bars on stderr
}

GEOMETRIC_DEFAULTS = {
    "a": 1.0,                        # Beta(a, b) stationary law of lambda_t
    "b": 1.0,
    "c": 1.0,                        # diffusion time scale
}

NRM_DEFAULTS = {
    "decay": 1.0,                    # exponential decay of each jump's mass
    "mass": 1.0,                     # M in w(J) = M J^-1 e^-J
    "jump_floor": 1e-4,              # jumps below eps are not simulated
    "tol_rel": 1e-10,                # lookback L = ln(1 / tol_rel) / decay
}

CHANGEPOINT_DEFAULTS = {
    "rate": 1.0,                     # change points per unit time
}

BASELINE_DEFAULTS = {
    "mean0": 0.0,                    # normal-inverse-gamma G0
    "kappa0": 0.1,
    "shape0": 2.0,
    "scale0": 1.0,
}

SIMULATE_DEFAULTS = {
    "horizon": 10.0,                 # weights/data on (0, horizon]
    "n_times": 100,                  # evenly spaced evaluation times
    "K": 20,                         # truncation of the weight trace
}

DICHOTOMY_DEFAULTS = {
    "h_grid": [1.0, 0.1, 0.01, 0.001],
    "t": 10.0,                       # evaluation time
    "n_reps": 10000,
    "min_reps": 100,                 # below this every flag is LOW_POWER
    "common_random_numbers": True,   # one realization per replicate across the h grid
}

FIGURE1_DEFAULTS = {
    "b_grid": [1.0, 10.0, 30.0, 50.0],
    "a": 1.0,
    "c": 1.0,
    "L": 1000,                       # grid t_l = t_{l-1} + 1/l^2
}

INFERENCE_DEFAULTS = {
    "rate_shape": 1.0,               # Gamma prior on the gap rate
    "rate_rate": 1.0,
    "fixed_rate": None,              # freeze the rate instead of sampling it
    "n_iterations": 5000,
    "n_burnin": 1000,
    "proposal_scale": 0.5,           # half-width of the shift move
    "n_chains": 2,
    "use_likelihood": True,          # false samples the prior
    "grid_points": 100,              # summary grid over (0, t_n]
}

VALIDATE_DEFAULTS = {
    "n_reps": 10000,
}
