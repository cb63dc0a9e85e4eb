"""Command-line pipeline: features, judging, BT fitting, surrogate training and reports."""
from .config import AblationConfig, ConfigError, JudgeEndpointConfig, Paths, RunConfig, config_from_dict, load_config
from .judge import JudgeClient, JudgeError, JudgeRun, plan_pairs, run_judging
from .main import build_parser, main
from .prompts import TemplateError, load_template, render
from .stages import (EXIT_ERROR, EXIT_OK, EXIT_PARTIAL, StageError, cmd_ablate_features, cmd_ablate_sampling,
                     cmd_features, cmd_fit_bt, cmd_judge, cmd_report, cmd_simulate, cmd_surrogate)
