"""Lateral Casimir-Polder force on a circularly polarised atom near a nanofiber."""
