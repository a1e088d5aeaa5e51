"""Domain entities and business logic."""

from latent_camo.domain.scene import Box, ConceptExemplar, SceneRecord, VehicleGeometry

__all__ = ["Box", "ConceptExemplar", "SceneRecord", "VehicleGeometry"]
