"""This module contains the symbol table mapping each symbol of the model equations to the field or
parameter group which holds it."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict


# pylint: disable=too-few-public-methods
class SymbolHomes:
    """Stores the kinds of homes a symbol can have."""

    FIELD = "field"
    PARAMS = "params"
    CONFIG = "config"


class Symbol(BaseModel):
    """Home of a symbol.

    Attributes:
        home (str): field (a dotted attribute path on StepOutput/ModelState), params (a parameter
            name prefix of a built VHRNN) or config (a ModelConfig field).
        path (str): The attribute path, prefix or field name.
    """

    home: str
    path: str

    model_config = ConfigDict(populate_by_name=True, frozen=True)


SYMBOLS: dict[str, Symbol] = {
    "x_t": Symbol(home=SymbolHomes.CONFIG, path="x_dim"),
    "z_t": Symbol(home=SymbolHomes.FIELD, path="z"),
    "h_t": Symbol(home=SymbolHomes.FIELD, path="state.primary.h"),
    "c_t": Symbol(home=SymbolHomes.FIELD, path="state.primary.c"),
    "θ": Symbol(home=SymbolHomes.PARAMS, path="theta."),
    "θ hidden state": Symbol(home=SymbolHomes.FIELD, path="state.hyper.h"),
    "ω": Symbol(home=SymbolHomes.PARAMS, path="omega."),
    "g": Symbol(home=SymbolHomes.PARAMS, path="cell."),
    "φ^x": Symbol(home=SymbolHomes.PARAMS, path="phi_x."),
    "φ^z": Symbol(home=SymbolHomes.PARAMS, path="phi_z."),
    "φ^prior": Symbol(home=SymbolHomes.PARAMS, path="prior."),
    "φ^enc": Symbol(home=SymbolHomes.PARAMS, path="enc."),
    "φ^dec": Symbol(home=SymbolHomes.PARAMS, path="dec."),
    "μ_t^prior": Symbol(home=SymbolHomes.FIELD, path="prior.mean"),
    "Σ_t^prior": Symbol(home=SymbolHomes.FIELD, path="prior.log_std"),
    "μ_t^enc": Symbol(home=SymbolHomes.FIELD, path="posterior.mean"),
    "Σ_t^enc": Symbol(home=SymbolHomes.FIELD, path="posterior.log_std"),
    "μ_t^dec": Symbol(home=SymbolHomes.FIELD, path="decoder.mean"),
    "Σ_t^dec": Symbol(home=SymbolHomes.FIELD, path="decoder.log_std"),
    "hyper input": Symbol(home=SymbolHomes.CONFIG, path="hyper_input"),
}
"""Σ symbols live as log standard deviations: Σ = diag(exp(2·log_std))."""
