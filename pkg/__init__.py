"""
Latent Camouflage

Sistema de camuflagem adversarial em duas etapas (No-Box → White-Box) com edição
condicional no espaço latente, em escala de bancada.
"""

__version__ = "0.1.0"
