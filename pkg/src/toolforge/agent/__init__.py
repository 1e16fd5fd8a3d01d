"""ReAct orchestration over the meta-tool layer, in five architecture variants."""

from .llm import LLMClient, LLMResponse, ScriptedLLMClient, ScriptedTurn, ToolCall
from .loop import AgentConfig, Environment, Session, Transcript, Variant, count_metrics, run_session, system_prompt
from .scenario import Scenario, ScenarioRun, is_complete, load_scenario, run_scenario

__all__ = [
    "AgentConfig", "Environment", "LLMClient", "LLMResponse", "Scenario", "ScenarioRun", "ScriptedLLMClient",
    "ScriptedTurn", "Session", "ToolCall", "Transcript", "Variant", "count_metrics", "is_complete",
    "load_scenario", "run_scenario", "run_session", "system_prompt",
]
