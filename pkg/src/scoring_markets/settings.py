# settings.py
import pathlib

import trafaret_config
from trafaret_config import commandline

from scoring_markets.utils import TRAFARET


PROJECT_ROOT = pathlib.Path(__file__).parent
CONFIG_DIR = PROJECT_ROOT / 'config'
DEFAULT_CONFIG_PATH = CONFIG_DIR / 'mode_market.yaml'
DEFAULT_FIGURE_CONFIG = CONFIG_DIR / 'figures.yaml'


def bundled_configs():
    return sorted(path.stem for path in CONFIG_DIR.glob('*.yaml'))


def resolve_config_path(value, command=None):
    """A config path, or the stem of a bundled config; figure runs default to the figure config"""
    if value is None:
        return DEFAULT_FIGURE_CONFIG if command == 'figure' else DEFAULT_CONFIG_PATH
    path = pathlib.Path(value)
    if not path.exists() and (CONFIG_DIR / '{}.yaml'.format(value)).exists():
        return CONFIG_DIR / '{}.yaml'.format(value)
    return path


def add_config_options(ap):
    # -c/--config, --print-config, --print-config-vars, -C/--check-config
    commandline.standard_argparse_options(ap, default_config=None)


def load_config(path):
    """Validated config dict; raises trafaret_config.ConfigError with printable output"""
    return trafaret_config.read_and_validate(str(path), TRAFARET)
