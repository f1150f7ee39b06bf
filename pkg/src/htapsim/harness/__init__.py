"""Workloads, system compositions, metrics and CSV output."""
from .report import (FIGURE_WORKLOADS, PLOT_FIELDS, Point, emit_csv, emit_plot_data, end_to_end, mvcc_sweep, placement_sweep,
                     plot_data, propagation_sweep, snapshot_sweep)
from .systems import CSV_FIELDS, IDEAL_FLAGS, SYSTEMS, MetricsReport, Simulation, SystemConfig, run
from .workload import Workload, WorkloadSpec, generate_workload

__all__ = ["CSV_FIELDS", "FIGURE_WORKLOADS", "IDEAL_FLAGS", "PLOT_FIELDS", "SYSTEMS", "MetricsReport", "Point", "Simulation",
           "SystemConfig", "Workload", "WorkloadSpec", "emit_csv", "emit_plot_data", "end_to_end",
           "generate_workload", "mvcc_sweep", "placement_sweep", "plot_data", "propagation_sweep", "run",
           "snapshot_sweep"]
