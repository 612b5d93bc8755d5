from .base import (
    Predictor,
    SchemaMismatchError,
    conversion_heatmap,
    evaluate_mae,
    load_model,
)
from .forest import ForestPredictor, fit_forest
from .linreg import LinRegModel, fit_linreg
from .mlp import MlpPredictor, MlpTrainParams, fit_mlp, mlp_loss, mlp_loss_grad

__all__ = [
    "Predictor", "SchemaMismatchError", "conversion_heatmap", "evaluate_mae",
    "load_model", "ForestPredictor", "fit_forest", "LinRegModel", "fit_linreg",
    "MlpPredictor", "MlpTrainParams", "fit_mlp", "mlp_loss", "mlp_loss_grad",
]
