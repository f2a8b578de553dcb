# main.py
# Punto de entrada: escenario -> simulación / campaña / barrido / detector / síntesis -> artefactos
from __future__ import annotations
import argparse
import json
import logging
import sys

from config.settings import Settings
from domain.errors import (
    ConfigError,
    SimulationDivergedError,
    TrainingDivergedError,
    UnknownProfileError,
)
from interface_adapters.controllers.scenario_controller import VERBS, ScenarioController

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sda-sim", description="Simulador de ataques de privación de sensores en UAV")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", help="escenario YAML/JSON (por defecto SDA_CONFIG o config/default.yaml)")
        p.add_argument("--seed", type=int, help="semilla (maestra en campañas)")
        p.add_argument("--out", help="directorio de artefactos (por defecto bajo SDA_OUTPUT_ROOT)")
        p.add_argument("--runs", type=int, help="repeticiones por modo")
        p.add_argument("--mode", help="modo de ataque; en campaign, lista separada por comas")
        if verb == "synth-train":
            p.add_argument("--steps", type=int, help="pasos de agente a entrenar")
        if verb == "synth-rollout":
            p.add_argument("--policy", default="random", help="policy.pt o never|always|random")
    return parser


def main(argv: list[str] | None = None) -> int:
    settings = Settings()
    logging.basicConfig(
        level=settings.log_level(),
        format="%(asctime)s [%(levelname)s] %(message)s",
    )
    args = build_parser().parse_args(argv)

    try:
        controller = ScenarioController(settings, config_path=args.config)
        result, out_dir = controller.dispatch(
            args.verb,
            seed=args.seed,
            out=args.out,
            runs=args.runs,
            mode=args.mode,
            steps=getattr(args, "steps", None),
            policy=getattr(args, "policy", None),
        )
    except (ConfigError, UnknownProfileError) as exc:
        logger.error("Error de configuración: %s", exc)
        return EXIT_CONFIG
    except (SimulationDivergedError, TrainingDivergedError) as exc:
        logger.error("Error de simulación/entrenamiento: %s", exc)
        return EXIT_SIMULATION
    except Exception:
        logger.exception("Error inesperado en %s", args.verb)
        return EXIT_ERROR

    logger.info("Artefactos en %s", out_dir)
    print(json.dumps(result, indent=2, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
