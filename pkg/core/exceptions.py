"""
Exceções customizadas do sistema de camuflagem adversarial.

Os códigos de saída da CLI são derivados destas classes (ver `exit_code_for`).
"""


class CamouflageError(Exception):
    """Exceção base para erros do sistema."""

    exit_code = 1


class DataValidationError(CamouflageError):
    """Erro de validação de dados (tensores, máscaras, formatos)."""

    exit_code = 2


class DegenerateRegionError(DataValidationError):
    """Região de máscara vazia ou que desaparece em alguma resolução."""
    pass


class InvalidConfigurationError(CamouflageError):
    """Configuração inválida fornecida."""

    exit_code = 2


class NotReadyError(CamouflageError):
    """Artefato ausente ou ainda não treinado (checkpoint, modelo, corpus)."""

    exit_code = 3


class CorpusLoadError(NotReadyError):
    """Arquivo do corpus ausente ou corrompido."""
    pass


class NumericalError(CamouflageError):
    """Falha numérica: perda NaN/Inf, singularidade de ᾱ etc."""

    exit_code = 4


class TrainingError(CamouflageError):
    """Erro inesperado durante um treinamento."""
    pass


def exit_code_for(error: BaseException) -> int:
    """Retorna o código de saída da CLI para uma exceção."""
    if isinstance(error, CamouflageError):
        return error.exit_code
    return 1
