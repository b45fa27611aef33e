import logging
import logging.config
import os

import yaml


def setup_fallback_logging(log_dir: str):
    """Fallback logging if _config file not found!"""
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(levelname)-8s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=[
            logging.StreamHandler(),
            logging.FileHandler(os.path.join(log_dir, 'centerbox.log'), encoding="utf-8")
        ]
    )


def _relocate_file_handlers(config: dict, log_dir: str) -> dict:
    """Point every file handler of the dictConfig at LOG_DIR."""
    for handler in config.get('handlers', {}).values():
        filename = handler.get('filename')
        if filename:
            handler['filename'] = os.path.join(log_dir, os.path.basename(filename))
    return config


def setup_logging():
    """Setup Logging from YAML"""
    log_dir = os.getenv('LOG_DIR', 'logs')
    config_path = os.getenv('LOGGING_CONFIG', 'logging_config.yaml')

    # Create dir if not exists
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    # Load YAML _config
    try:
        with open(config_path, 'r') as f:
            config = yaml.safe_load(f)
            logging.config.dictConfig(_relocate_file_handlers(config, log_dir))
    except FileNotFoundError:
        setup_fallback_logging(log_dir)
        logging.getLogger(__name__).warning(
            "File %s is not found!, using default configuration", config_path)
    except Exception as e:
        setup_fallback_logging(log_dir)
        logging.getLogger(__name__).warning("Error loading logging _config: %s", e)


def apply_log_level(logger: logging.Logger, level: str):
    """Set ``level`` on the logger and on its console handlers; file handlers keep theirs."""
    logger.setLevel(level)
    for handler in logger.handlers or logging.getLogger().handlers:
        if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
            handler.setLevel(level)
