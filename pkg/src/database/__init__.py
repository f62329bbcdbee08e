from .repository import Experiment, Repository, RunRecord

__all__ = ["Experiment", "Repository", "RunRecord"]
