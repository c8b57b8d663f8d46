from vqtk.objectives.kd import kd_loss, kd_loss_gradient

__all__ = ["kd_loss", "kd_loss_gradient"]
