import math
import aiosqlite
from datetime import datetime
from pathlib import Path
from typing import Optional
from dataclasses import dataclass, field

from .models import SCHEMA


@dataclass
class Experiment:
    task: str
    config_text: str
    output_dir: str
    replications: int
    status: str = "running"
    median_metric: Optional[float] = None
    created_at: datetime = field(default_factory=datetime.now)
    finished_at: Optional[datetime] = None
    id: Optional[int] = None


@dataclass
class RunRecord:
    experiment_id: int
    replication: int
    seed: int
    final_metric: Optional[float]
    final_drm: Optional[float]
    csv_path: str
    elapsed_ms: float


def _real(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class Repository:

    def __init__(self, db_path: Path):
        self.db_path = db_path
        self._conn: Optional[aiosqlite.Connection] = None

    async def connect(self) -> None:
        self._conn = await aiosqlite.connect(self.db_path)
        self._conn.row_factory = aiosqlite.Row
        await self._conn.executescript(SCHEMA)
        await self._conn.commit()

    async def close(self) -> None:
        if self._conn:
            await self._conn.close()
            self._conn = None

    async def __aenter__(self) -> "Repository":
        await self.connect()
        return self

    async def __aexit__(self, *args) -> None:
        await self.close()

    async def add_experiment(self, experiment: Experiment) -> int:
        cursor = await self._conn.execute(
            """
            INSERT INTO experiments (task, config_text, output_dir, replications, status, created_at)
            VALUES (?, ?, ?, ?, ?, ?)
            """,
            (experiment.task, experiment.config_text, experiment.output_dir, experiment.replications,
             experiment.status, experiment.created_at.isoformat())
        )
        await self._conn.commit()
        experiment.id = cursor.lastrowid
        return cursor.lastrowid

    async def finish_experiment(self, experiment_id: int, status: str, median_metric: Optional[float] = None) -> None:
        await self._conn.execute(
            "UPDATE experiments SET status = ?, median_metric = ?, finished_at = ? WHERE id = ?",
            (status, _real(median_metric), datetime.now().isoformat(), experiment_id)
        )
        await self._conn.commit()

    async def add_run(self, run: RunRecord) -> None:
        await self._conn.execute(
            """
            INSERT INTO runs (experiment_id, replication, seed, final_metric, final_drm, csv_path, elapsed_ms)
            VALUES (?, ?, ?, ?, ?, ?, ?)
            ON CONFLICT(experiment_id, replication) DO UPDATE SET
                seed = excluded.seed,
                final_metric = excluded.final_metric,
                final_drm = excluded.final_drm,
                csv_path = excluded.csv_path,
                elapsed_ms = excluded.elapsed_ms
            """,
            (run.experiment_id, run.replication, run.seed, _real(run.final_metric), _real(run.final_drm),
             run.csv_path, run.elapsed_ms)
        )
        await self._conn.commit()

    @staticmethod
    def _experiment(row) -> Experiment:
        return Experiment(
            id=row["id"],
            task=row["task"],
            config_text=row["config_text"],
            output_dir=row["output_dir"],
            replications=row["replications"],
            status=row["status"],
            median_metric=row["median_metric"],
            created_at=datetime.fromisoformat(row["created_at"]),
            finished_at=datetime.fromisoformat(row["finished_at"]) if row["finished_at"] else None,
        )

    async def get_experiment(self, experiment_id: int) -> Optional[Experiment]:
        cursor = await self._conn.execute("SELECT * FROM experiments WHERE id = ?", (experiment_id,))
        row = await cursor.fetchone()
        return self._experiment(row) if row else None

    async def list_experiments(self, limit: int = 20, task: Optional[str] = None) -> list[Experiment]:
        query = "SELECT * FROM experiments"
        params: list = []

        if task:
            query += " WHERE task = ?"
            params.append(task)

        query += " ORDER BY id DESC LIMIT ?"
        params.append(limit)

        cursor = await self._conn.execute(query, params)
        rows = await cursor.fetchall()
        return [self._experiment(row) for row in rows]

    async def get_runs(self, experiment_id: int) -> list[RunRecord]:
        cursor = await self._conn.execute(
            """
            SELECT experiment_id, replication, seed, final_metric, final_drm, csv_path, elapsed_ms
            FROM runs WHERE experiment_id = ? ORDER BY replication ASC
            """,
            (experiment_id,)
        )
        rows = await cursor.fetchall()
        return [
            RunRecord(
                experiment_id=row["experiment_id"],
                replication=row["replication"],
                seed=row["seed"],
                final_metric=row["final_metric"],
                final_drm=row["final_drm"],
                csv_path=row["csv_path"],
                elapsed_ms=row["elapsed_ms"],
            )
            for row in rows
        ]
