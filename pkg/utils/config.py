import os
from dotenv import load_dotenv

load_dotenv()

class Config:
    # Grids and tolerances
    GRID_NODES = int(os.getenv('GRID_NODES', 2000))
    TOL = float(os.getenv('TOL', 1e-8))

    # Randomized suites
    SEED = int(os.getenv('SEED', 0))
    TRIALS = int(os.getenv('TRIALS', 20))

    # Shooting solver
    SHOOT_STEPS = int(os.getenv('SHOOT_STEPS', 10000))
    POLE_CUTOFF = float(os.getenv('POLE_CUTOFF', 1e-3))

    # Cheeger search
    CHEEGER_SCAN_POINTS = int(os.getenv('CHEEGER_SCAN_POINTS', 64))
    CHEEGER_MODEL_NODES = int(os.getenv('CHEEGER_MODEL_NODES', 801))
    COARSE_NODES = int(os.getenv('COARSE_NODES', 64))

    # Rayleigh quotient descent (p != 2)
    RAYLEIGH_STARTS = int(os.getenv('RAYLEIGH_STARTS', 5))
    RAYLEIGH_MAXITER = int(os.getenv('RAYLEIGH_MAXITER', 600))

    # Almost-rigidity sampling
    RIGIDITY_D_POINTS = int(os.getenv('RIGIDITY_D_POINTS', 5))

    # CLI
    WORKERS = int(os.getenv('WORKERS', 1))
    OUTPUT_FORMAT = os.getenv('OUTPUT_FORMAT', 'json')
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

config = Config()
