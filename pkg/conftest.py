"""
Configuração do pytest na raiz do repositório.

O diretório do repositório é o próprio pacote; aqui ele é registrado como
`latent_camo` para que os testes importem `latent_camo.*` sem instalação.
"""

import importlib.util
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parent
PACKAGE_NAME = "latent_camo"

if PACKAGE_NAME not in sys.modules:
    spec = importlib.util.spec_from_file_location(
        PACKAGE_NAME,
        PROJECT_ROOT / "__init__.py",
        submodule_search_locations=[str(PROJECT_ROOT)],
    )
    module = importlib.util.module_from_spec(spec)
    sys.modules[PACKAGE_NAME] = module
    spec.loader.exec_module(module)

collect_ignore = ["examples"]
