"""Versão da ferramenta, gravada no cabeçalho de todos os artefatos."""

__version__ = "1.0.0"
