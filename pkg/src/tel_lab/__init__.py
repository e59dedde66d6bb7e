"""Failover traffic engineering: learning-automata path selection, two-table
rule compilation and a fluid flow simulator with a shortest-path baseline."""

from .topology import LinkAttributes, NetworkGraph, build_simple_topology, load_graphml
from .dla import FlowDemand, PathCandidate, PathPlan, SolverConfig, select_paths
from .rulegen import assign_flow_set_ids, compile_plans, memory_cost
from .dataplane import FailureEvent, SimConfig, run_flow_sim
from .baseline import shortest_path, reroute_after_failure

__all__ = [
    "LinkAttributes", "NetworkGraph", "build_simple_topology", "load_graphml",
    "FlowDemand", "PathCandidate", "PathPlan", "SolverConfig", "select_paths",
    "assign_flow_set_ids", "compile_plans", "memory_cost",
    "FailureEvent", "SimConfig", "run_flow_sim",
    "shortest_path", "reroute_after_failure",
]
