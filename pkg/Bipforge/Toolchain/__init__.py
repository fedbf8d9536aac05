import logging
import os

logger = logging.getLogger(__name__)

DEFAULTS = {
    'ENUMERATION_LIMIT': 1_000_000,
    'UNIVERSE_BOUND': 20,
    'LOG_LEVEL': 'WARNING',
    'LOG_FORMAT': '%(asctime)s - %(levelname)s - %(message)s',
}


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r: not an integer, using %d", name, raw, default)
        return default
    if value < 1:
        logger.warning("Ignoring %s=%r: must be positive, using %d", name, raw, default)
        return default
    return value


def load_config():
    """Read the process configuration from the environment"""
    config = dict(DEFAULTS)
    config['ENUMERATION_LIMIT'] = _env_int('BIPFORGE_LIMIT', DEFAULTS['ENUMERATION_LIMIT'])
    config['UNIVERSE_BOUND'] = _env_int('BIPFORGE_UNIVERSE_BOUND', DEFAULTS['UNIVERSE_BOUND'])
    config['LOG_LEVEL'] = os.environ.get('BIPFORGE_LOG_LEVEL', DEFAULTS['LOG_LEVEL']).upper()
    return config


config = load_config()
