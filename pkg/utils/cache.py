"""
Cache LRU em memória para artefatos custosos de recomputar.

Usado para os exemplares de conceito, compartilhados por todas as imagens de
uma cena.
"""

from collections import OrderedDict
from typing import Any, Callable, Dict, Hashable, Optional


class LRUCache:
    """
    Cache LRU com estatísticas de acerto.

    Exemplo:
        cache = LRUCache(maxsize=128)
        value = cache.get_or_compute(key, lambda: expensive(key))
    """

    def __init__(self, maxsize: int = 256):
        """
        Args:
            maxsize: Número máximo de entradas em memória
        """
        if maxsize < 1:
            raise ValueError("maxsize deve ser >= 1")
        self.maxsize = maxsize
        self._data: "OrderedDict[Hashable, Any]" = OrderedDict()
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[Any]:
        """Obtém um valor do cache (None se ausente)."""
        if key in self._data:
            self._data.move_to_end(key)
            self.hits += 1
            return self._data[key]
        self.misses += 1
        return None

    def set(self, key: Hashable, value: Any) -> None:
        """Armazena um valor, descartando o menos usado se necessário."""
        self._data[key] = value
        self._data.move_to_end(key)
        while len(self._data) > self.maxsize:
            self._data.popitem(last=False)

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        """Retorna o valor em cache ou calcula, armazena e retorna."""
        if key in self._data:
            return self.get(key)
        self.misses += 1
        value = compute()
        self.set(key, value)
        return value

    def clear(self) -> None:
        """Limpa o cache e as estatísticas."""
        self._data.clear()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._data)

    def stats(self) -> Dict[str, int]:
        """Estatísticas do cache."""
        return {"size": len(self._data), "hits": self.hits, "misses": self.misses}
