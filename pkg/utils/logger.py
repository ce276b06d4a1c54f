import logging
import sys

_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(name, level=None):
    """Configura el logger para la aplicación.

    Un único StreamHandler por logger; llamadas repetidas solo ajustan el nivel.
    """
    logger = logging.getLogger(name)
    if not any(getattr(h, '_preshape', False) for h in logger.handlers):
        formatter = logging.Formatter(_FORMAT)
        handler = logging.StreamHandler(sys.stdout)
        handler.setFormatter(formatter)
        handler._preshape = True
        logger.addHandler(handler)
        logger.propagate = False
    if level is not None:
        logger.setLevel(level)
    elif logger.level == logging.NOTSET:
        logger.setLevel(logging.INFO)
    return logger


def set_global_level(level):
    """Aplica un nivel a todos los loggers creados con setup_logger."""
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
    for logger in logging.Logger.manager.loggerDict.values():
        if isinstance(logger, logging.Logger) and any(
            getattr(h, '_preshape', False) for h in logger.handlers
        ):
            logger.setLevel(level)


# Logger de la aplicación
app_logger = setup_logger('preshape_tracker')
