SCHEMA = """
CREATE TABLE IF NOT EXISTS experiments (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    task TEXT NOT NULL,
    config_text TEXT NOT NULL,
    output_dir TEXT NOT NULL,
    replications INTEGER NOT NULL,
    status TEXT NOT NULL DEFAULT 'running',
    median_metric REAL,
    created_at TIMESTAMP NOT NULL,
    finished_at TIMESTAMP
);

CREATE TABLE IF NOT EXISTS runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    experiment_id INTEGER NOT NULL REFERENCES experiments(id),
    replication INTEGER NOT NULL,
    seed INTEGER NOT NULL,
    final_metric REAL,
    final_drm REAL,
    csv_path TEXT NOT NULL,
    elapsed_ms REAL NOT NULL,
    UNIQUE(experiment_id, replication)
);

CREATE INDEX IF NOT EXISTS idx_experiments_created ON experiments(created_at);
CREATE INDEX IF NOT EXISTS idx_runs_experiment ON runs(experiment_id);
"""
