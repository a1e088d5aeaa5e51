"""
Sistema de logging estruturado para o projeto.

Fornece logging configurável com níveis, formatação, rotação de arquivos e
um arquivo `run.log` por diretório de execução (treinos e avaliações).
"""

import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(funcName)s:%(lineno)d | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
ROOT_LOGGER_NAME = "latent_camo"


def _default_level() -> str:
    """Nível padrão: variável de ambiente LATENT_CAMO_LOG_LEVEL ou INFO."""
    return os.getenv("LATENT_CAMO_LOG_LEVEL", "INFO")


def setup_logger(
    name: str = ROOT_LOGGER_NAME,
    level: Optional[str] = None,
    log_file: Optional[str] = None,
    log_dir: str = "logs",
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
) -> logging.Logger:
    """
    Configura e retorna um logger estruturado.

    Args:
        name: Nome do logger
        level: Nível de log (DEBUG, INFO, WARNING, ERROR, CRITICAL); None usa o ambiente
        log_file: Nome do arquivo de log (None = não salva em arquivo)
        log_dir: Diretório para salvar logs
        max_bytes: Tamanho máximo do arquivo antes de rotacionar
        backup_count: Número de arquivos de backup a manter

    Returns:
        logging.Logger: Logger configurado
    """
    logger = logging.getLogger(name)

    log_level = getattr(logging, (level or _default_level()).upper(), logging.INFO)
    logger.setLevel(log_level)

    # Reconfiguração: apenas ajusta o nível dos handlers existentes
    if logger.handlers:
        for handler in logger.handlers:
            handler.setLevel(log_level)
        return logger

    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        _add_file_handler(logger, Path(log_dir) / log_file, log_level, max_bytes, backup_count)

    return logger


def _add_file_handler(
    logger: logging.Logger,
    path: Path,
    level: int,
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 5,
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    file_handler = RotatingFileHandler(
        path,
        maxBytes=max_bytes,
        backupCount=backup_count,
        encoding="utf-8",
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(file_handler)


def attach_run_log(run_dir: Path, logger: Optional[logging.Logger] = None) -> logging.Logger:
    """
    Anexa um arquivo `run.log` do diretório de execução ao logger raiz do pacote.

    Chamadas repetidas para o mesmo diretório não duplicam o handler.

    Args:
        run_dir: Diretório da execução (treino ou avaliação)
        logger: Logger alvo (padrão: logger raiz do pacote)

    Returns:
        logging.Logger: O logger com o handler de arquivo anexado
    """
    logger = logger or setup_logger(ROOT_LOGGER_NAME)
    target = (Path(run_dir) / "run.log").resolve()
    for handler in logger.handlers:
        if isinstance(handler, RotatingFileHandler) and Path(handler.baseFilename) == target:
            return logger
    _add_file_handler(logger, target, logger.level or logging.INFO)
    return logger


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Retorna um logger filho do logger raiz do pacote.

    Loggers de módulo (`latent_camo.backend.sampler` etc.) propagam para o
    logger raiz, que concentra os handlers.

    Args:
        name: Nome do logger (None = logger raiz)

    Returns:
        logging.Logger: Logger configurado
    """
    root = logging.getLogger(ROOT_LOGGER_NAME)
    if not root.handlers:
        setup_logger(ROOT_LOGGER_NAME)

    if name is None or name == ROOT_LOGGER_NAME:
        return root
    if not name.startswith(ROOT_LOGGER_NAME + "."):
        name = f"{ROOT_LOGGER_NAME}.{name}"
    return logging.getLogger(name)
