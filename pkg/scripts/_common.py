from pathlib import Path

from securebf.scenario import bundled_scenario_path, load_scenario


def scenario(arg: str):
    if arg in ("default", "default_scenario"):
        return load_scenario(bundled_scenario_path("default_scenario"))
    return load_scenario(Path(arg))


def pyplot():
    """matplotlib.pyplot with a headless backend, or None if not installed."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None
    return plt
