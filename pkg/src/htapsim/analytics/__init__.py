"""Vault-side analytical engine: plans, operators, placement, tasks and scheduling."""
from .placement import PlacementPlan, Strategy, place
from .plan import parse_plan, format_plan
from .reference import evaluate
from .scheduler import BASIC, OPTIMIZED, PimScheduler, Schedule, TraceEntry, execute_graph, schedule
from .tasks import Task, TaskGraph, decompose

__all__ = ["BASIC", "OPTIMIZED", "PimScheduler", "PlacementPlan", "Schedule", "Strategy", "Task",
           "TaskGraph", "TraceEntry", "decompose", "evaluate", "execute_graph", "format_plan",
           "parse_plan", "place", "schedule"]
