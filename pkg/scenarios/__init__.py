"""
Registry of the reference test cases.

Each scenario names a preset under config/presets and the checks that
make sense for it.
"""

from dataclasses import dataclass
from typing import Iterable, Optional

# Available scenarios
SCENARIOS = {
    "steady-disturbance": "Steady tanh interface disturbed by a cubic vortex (k=0, triangles)",
    "thin-interface": "Random data in a disc with thin interfaces, rotating disc flow (k=0, squares)",
    "peclet-sweep": "Cellular flow at Pe in {1, 50, 200} from identical random data (k=1, polygons)",
    "spinodal": "Spinodal decomposition without convection, free-energy decay check (k=0, squares)",
}


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    sweep: bool = False


def get_scenario(name: str) -> Scenario:
    """Get scenario by name."""
    if name not in SCENARIOS:
        raise ValueError(f"Scenario '{name}' not found")
    return Scenario(name=name, description=SCENARIOS[name], sweep=(name == "peclet-sweep"))


def run_test_case(name: str, overrides: Iterable[str] = (), scale: str = "desk",
                  output_dir: Optional[str] = None, write_outputs: bool = True, n_jobs: int = 1):
    """
    Run a registered scenario.

    Args:
        name: Scenario name
        overrides: 'section.key=value' strings applied to the preset
        scale: 'full' or 'desk'
        output_dir: Run directory
        write_outputs: Write output files
        n_jobs: Worker processes of the Peclet sweep

    Returns:
        RunOutcome, or a dict Peclet -> SweepMember for the sweep
    """
    from config import config_from_preset
    from scenarios.runner import run_peclet_sweep, run_simulation

    scenario = get_scenario(name)
    config = config_from_preset(name, scale, overrides)
    if scenario.sweep:
        return run_peclet_sweep(config, n_jobs=n_jobs, output_dir=output_dir, write_outputs=write_outputs)
    return run_simulation(config, output_dir=output_dir, write_outputs=write_outputs)
