"""
Command system for the allocation toolkit.
Implements the command-line subcommands on top of one shared flag set.
"""

import argparse
import io
import logging
import os
from typing import Callable, Dict, List, Optional, Sequence

import pandas as pd

from allocators.greedy import write_trace_csv
from allocators.lp import build_lp, dump_lp, solve_lp
from allocators.rounding import rounding_trials, write_rounding_report
from bench.experiments import (ALGORITHMS, K_ALGORITHMS, run_algorithm, run_calibration, run_competition,
                               run_payoff_vs_k, run_payoff_vs_m, run_relative_payoff, run_scalability,
                               sample_collections)
from bench.reporting import write_report
from campaign.allocation import read_allocation_csv, write_allocation_csv
from campaign.payoff import (RRSetEstimator, build_instance, objective_expected_revenue,
                             objective_revenue, overshoot_report)
from network.diffusion import estimate_influence_mc
from network.generators import graph_from_config, networks_from_config
from network.graph import InfluenceNetwork, write_probability_dump
from network.rrsets import RRCollection, load_collection, save_collection
from utils.config import Config
from utils.errors import ConfigurationError
from utils.streams import STREAM_ROUNDING, STREAM_SIMULATION, derive_seed

logger = logging.getLogger(__name__)

# flag dest -> config key
CONFIG_FLAGS = {
    'graph': 'graph', 'directed': 'directed', 'm': 'm', 'total_seeds': 'total_seeds',
    'exposure_bound': 'exposure_bound', 'budgets': 'budgets', 'beta': 'beta', 'epsilon': 'epsilon',
    'rho_mult': 'rho_mult', 'seed': 'seed', 'threads': 'threads', 'trials': 'trials',
    'lp_solver': 'lp_solver', 'network_mode': 'network_mode', 'nodes': 'nodes',
    'lambda_max': 'lambda_max',
}


def parse_list(cast: Callable) -> Callable[[str], List]:
    """argparse type for comma-separated values."""
    def parse(text: str) -> List:
        try:
            return [cast(part) for part in text.split(',') if part.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse '{text}' as a comma-separated list")
    return parse


def _scalar_or_list(text: str):
    values = parse_list(float)(text)
    return values[0] if len(values) == 1 else values


class Command:
    """Represents a command with its handler and metadata."""

    def __init__(self, name: str, handler: Callable, description: str = "",
                 arguments: Optional[Callable[[argparse.ArgumentParser], None]] = None,
                 aliases: List[str] = None):
        """Initialize command."""
        self.name = name
        self.handler = handler
        self.description = description
        self.arguments = arguments
        self.aliases = aliases if aliases else []


class CommandManager:
    """Manages command registration, parsing and execution."""

    def __init__(self):
        """Initialize command manager."""
        self.commands: Dict[str, Command] = {}
        self._register_default_commands()

    def register(self, command: Command) -> None:
        """Register a command."""
        self.commands[command.name] = command
        for alias in command.aliases:
            self.commands[alias] = command

    def _register_default_commands(self) -> None:
        """Register default commands."""
        self.register(Command(
            name='help',
            handler=self._cmd_help,
            description='List the commands, or describe one',
            arguments=lambda p: p.add_argument('topic', nargs='?', help='command name'),
        ))

        self.register(Command(
            name='gen',
            handler=self._cmd_gen,
            description='Generate advertiser influence networks and dump their probabilities',
        ))

        self.register(Command(
            name='allocate',
            handler=self._cmd_allocate,
            description='Choose a seed allocation with one algorithm',
            arguments=self._allocate_arguments,
        ))

        self.register(Command(
            name='simulate',
            handler=self._cmd_simulate,
            description='Monte Carlo reach and expected revenue of an allocation CSV',
            arguments=lambda p: p.add_argument('--alloc', required=True, help='allocation CSV'),
        ))

        self.register(Command(
            name='calibrate',
            handler=self._cmd_calibrate,
            description='RR sample size calibration',
            arguments=self._calibrate_arguments,
        ))

        self.register(Command(
            name='exp-k',
            handler=self._cmd_exp_k,
            description='Payoff against the total seed cap K',
            arguments=self._exp_k_arguments,
        ))

        self.register(Command(
            name='exp-m',
            handler=self._cmd_exp_m,
            description='Payoff against the number of advertisers on identical networks',
            arguments=self._exp_m_arguments,
        ))

        self.register(Command(
            name='exp-compete',
            handler=self._cmd_exp_compete,
            description='Payoff against advertiser similarity (node swaps)',
            arguments=lambda p: p.add_argument('--s-values', type=parse_list(int),
                                               default=[0, 25, 50, 100, 200]),
        ))

        self.register(Command(
            name='exp-prob',
            handler=self._cmd_exp_prob,
            description='Relative payoff alpha against a uniform edge probability',
            arguments=lambda p: p.add_argument('--p-values', type=parse_list(float),
                                               default=[0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.9]),
        ))

        self.register(Command(
            name='exp-scale',
            handler=self._cmd_exp_scale,
            description='RR build and greedy wall-clock against thread count',
            arguments=self._exp_scale_arguments,
        ))

    @staticmethod
    def _common_arguments(parser: argparse.ArgumentParser) -> None:
        """Flags shared by every subcommand; unset flags keep the config file value."""
        parser.add_argument('--config', help='JSON config file')
        parser.add_argument('--graph', help='edge list file (default: synthetic graph)')
        parser.add_argument('--directed', action='store_const', const=True, default=None)
        parser.add_argument('--nodes', type=int, help='synthetic graph size')
        parser.add_argument('--network-mode', dest='network_mode',
                            choices=['independent', 'identical', 'swapped', 'uniform'])
        parser.add_argument('--lambda-max', dest='lambda_max', type=float,
                            help='upper end of the per-node lambda draw (0.3 suits dense directed graphs)')
        parser.add_argument('--m', type=int, help='number of advertisers')
        parser.add_argument('--total-seeds', dest='total_seeds', type=int, help='total seed cap K')
        parser.add_argument('--exposure-bound', dest='exposure_bound', type=int, help='r_v for every node')
        parser.add_argument('--budgets', type=_scalar_or_list, help='budget, or one per advertiser')
        parser.add_argument('--beta', type=float, help='penalty weight in [0, 1]')
        parser.add_argument('--epsilon', type=float, help='local search improvement threshold')
        parser.add_argument('--rho-mult', dest='rho_mult', type=int, help='RR sets per advertiser / n')
        parser.add_argument('--trials', type=int, help='Monte Carlo trials')
        parser.add_argument('--lp-solver', dest='lp_solver', choices=['highs', 'simplex'])
        parser.add_argument('--seed', type=int, help='master seed')
        parser.add_argument('--threads', type=int)
        parser.add_argument('--out', help='output path')
        parser.add_argument('--verbose', '-v', action='store_true')

    @staticmethod
    def _allocate_arguments(parser: argparse.ArgumentParser) -> None:
        parser.add_argument('--algo', choices=ALGORITHMS, default='greedy')
        parser.add_argument('--trace', help='write the greedy trace CSV here')
        parser.add_argument('--lp-dump', dest='lp_dump', help='write the LP as text here')
        parser.add_argument('--rounding-report', dest='rounding_report',
                            help='write independent LP roundings as CSV here')
        parser.add_argument('--rounding-trials', dest='rounding_trials', type=int, default=200)
        parser.add_argument('--overshoot', help='write per-advertiser budget overshoot as CSV here')
        parser.add_argument('--rr-cache', dest='rr_cache',
                            help='directory to reuse RR collections from (written when missing)')

    @staticmethod
    def _calibrate_arguments(parser: argparse.ArgumentParser) -> None:
        parser.add_argument('--multipliers', type=parse_list(int), default=[1, 2, 5, 10, 20, 50, 200])
        parser.add_argument('--repetitions', type=int, default=20)

    @staticmethod
    def _exp_k_arguments(parser: argparse.ArgumentParser) -> None:
        parser.add_argument('--k-values', type=parse_list(int), default=list(range(10, 101, 10)))
        parser.add_argument('--algorithms', type=parse_list(str), default=list(K_ALGORITHMS))

    @staticmethod
    def _exp_m_arguments(parser: argparse.ArgumentParser) -> None:
        parser.add_argument('--m-values', type=parse_list(int), default=[1, 2, 4, 8, 12, 16, 20])
        parser.add_argument('--algorithms', type=parse_list(str), default=['greedy'])
        parser.add_argument('--unlimited-exposure', action='store_true', help='r_v = m')

    @staticmethod
    def _exp_scale_arguments(parser: argparse.ArgumentParser) -> None:
        parser.add_argument('--m-values', type=parse_list(int), default=[1, 5, 10])
        parser.add_argument('--threads-list', type=parse_list(int), default=[1, 2, 4])

    def build_parser(self) -> argparse.ArgumentParser:
        """Argument parser with one subparser per registered command."""
        parser = argparse.ArgumentParser(prog='main.py',
                                         description='Multi-advertiser seed allocation toolkit')
        subparsers = parser.add_subparsers(dest='command', required=True)
        for name, command in sorted(self.commands.items()):
            if name != command.name:
                continue
            sub = subparsers.add_parser(name, help=command.description, description=command.description,
                                        aliases=command.aliases)
            self._common_arguments(sub)
            if command.arguments is not None:
                command.arguments(sub)
        return parser

    def parse(self, argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
        """Parse command-line arguments."""
        return self.build_parser().parse_args(argv)

    @staticmethod
    def load_config(args: argparse.Namespace) -> Config:
        """Config file values overridden by the flags that were given."""
        config = Config(getattr(args, 'config', None))
        config.update_from_flags({key: getattr(args, dest, None) for dest, key in CONFIG_FLAGS.items()})
        return config

    def execute(self, args: argparse.Namespace) -> str:
        """Run a parsed command; returns its text output."""
        command = self.commands.get(args.command)
        if command is None:
            raise ConfigurationError(f"Unknown command: {args.command}")
        config = self.load_config(args)
        logger.debug("running %s with config %s", command.name, config.fingerprint())
        return command.handler(config, args)

    def get_help(self, command_name: str = None) -> str:
        """Get help for a command or all commands."""
        if command_name:
            command = self.commands.get(command_name.lower())
            if command is None:
                return f"Unknown command: {command_name}"
            help_text = f"{command.name}\n{command.description}"
            if command.aliases:
                help_text += f"\nAliases: {', '.join(command.aliases)}"
            return help_text

        help_text = "Available commands:\n"
        for name, command in sorted(self.commands.items()):
            if name != command.name:
                continue  # Skip aliases
            help_text += f"{command.name} - {command.description}\n"
        return help_text

    # Command handlers
    @staticmethod
    def _report(frame: pd.DataFrame, config: Config, args: argparse.Namespace) -> str:
        text = write_report(frame, args.out, config)
        return f"wrote {len(frame)} rows to {args.out}" if args.out else text

    @staticmethod
    def _cached_collections(config: Config, networks: Sequence[InfluenceNetwork],
                            cache_dir: Optional[str]) -> List[RRCollection]:
        """RR collections from cache_dir when present for this config, sampled and saved otherwise."""
        if cache_dir is None:
            return sample_collections(config, networks)
        paths = [os.path.join(cache_dir, f"rr_{config.fingerprint()}_{j}.bin") for j in range(len(networks))]
        if all(os.path.exists(path) for path in paths):
            logger.info("loading RR collections from %s", cache_dir)
            return [load_collection(path) for path in paths]
        collections = sample_collections(config, networks)
        os.makedirs(cache_dir, exist_ok=True)
        for coll, path in zip(collections, paths):
            save_collection(coll, path)
        return collections

    def _cmd_help(self, config: Config, args: argparse.Namespace) -> str:
        """Handle help command."""
        return self.get_help(args.topic)

    def _cmd_gen(self, config: Config, args: argparse.Namespace) -> str:
        """Handle gen command."""
        graph = graph_from_config(config)
        networks = networks_from_config(config, graph)
        buffer = io.StringIO()
        write_probability_dump(networks, buffer)
        if args.out:
            with open(args.out, 'w', encoding='utf-8') as f:
                f.write(buffer.getvalue())
            return (f"wrote {len(networks)} networks ({graph.node_count} nodes, "
                    f"{graph.arc_count} arcs) to {args.out}")
        return buffer.getvalue()

    def _cmd_allocate(self, config: Config, args: argparse.Namespace) -> str:
        """Handle allocate command."""
        graph = graph_from_config(config)
        networks = networks_from_config(config, graph)
        instance = build_instance(config, networks, graph)
        collections = self._cached_collections(config, networks, args.rr_cache)

        solution = None
        if args.algo == 'lp-round' or args.lp_dump or args.rounding_report:
            lp = build_lp(instance, collections)
            if args.lp_dump:
                with open(args.lp_dump, 'w', encoding='utf-8') as f:
                    dump_lp(lp, f)
            solution = solve_lp(lp, config.get('lp_solver'))
            if args.rounding_report:
                report = rounding_trials(solution, args.rounding_trials,
                                         derive_seed(config.get_int('seed'), STREAM_ROUNDING, 1),
                                         config.get_int('threads', 1))
                write_rounding_report(report, args.rounding_report)

        trace: Optional[List[Dict]] = [] if args.trace else None
        alloc, opt_lp = run_algorithm(args.algo, instance, collections, config, solution, trace)
        if trace is not None:
            write_trace_csv(trace, args.trace)
        estimator = RRSetEstimator(collections)
        revenue = objective_revenue(instance, alloc, estimator)
        if args.overshoot:
            write_report(overshoot_report(instance, alloc, estimator), args.overshoot, config)

        summary = f"algorithm={args.algo} seeds={len(alloc)} revenue={revenue:.6f}"
        if opt_lp is not None:
            summary += f" opt_lp={opt_lp:.6f}"
        if args.out:
            write_allocation_csv(alloc, args.out, graph.labels)
            return summary
        buffer = io.StringIO()
        write_allocation_csv(alloc, buffer, graph.labels)
        return summary + "\n" + buffer.getvalue()

    def _cmd_simulate(self, config: Config, args: argparse.Namespace) -> str:
        """Handle simulate command."""
        graph = graph_from_config(config)
        networks = networks_from_config(config, graph)
        instance = build_instance(config, networks, graph)
        alloc = read_allocation_csv(args.alloc, graph.labels)
        trials = config.get_int('trials')
        threads = config.get_int('threads', 1)
        rng_seed = derive_seed(config.get_int('seed'), STREAM_SIMULATION)

        seeds = alloc.per_advertiser(instance.m)
        rows = []
        for j, net in enumerate(networks):
            estimate = estimate_influence_mc(net, seeds[j], trials, derive_seed(rng_seed, j), threads)
            rows.append({'advertiser': j, 'seeds': len(seeds[j]), 'mc_reach': estimate.mean,
                         'stderr': estimate.stderr})
        frame = pd.DataFrame(rows)
        frame['expected_revenue'] = objective_expected_revenue(instance, alloc, trials, rng_seed, threads)
        logger.info("simulated %d trials per advertiser", trials)
        return self._report(frame, config, args)

    def _cmd_calibrate(self, config: Config, args: argparse.Namespace) -> str:
        """Handle calibrate command."""
        frame = run_calibration(config, graph_from_config(config), args.multipliers, args.repetitions)
        return self._report(frame, config, args)

    def _cmd_exp_k(self, config: Config, args: argparse.Namespace) -> str:
        """Handle exp-k command."""
        frame = run_payoff_vs_k(config, graph_from_config(config), args.k_values, args.algorithms)
        return self._report(frame, config, args)

    def _cmd_exp_m(self, config: Config, args: argparse.Namespace) -> str:
        """Handle exp-m command."""
        frame = run_payoff_vs_m(config, graph_from_config(config), args.m_values, args.algorithms,
                                args.unlimited_exposure)
        return self._report(frame, config, args)

    def _cmd_exp_compete(self, config: Config, args: argparse.Namespace) -> str:
        """Handle exp-compete command."""
        m = args.m if args.m is not None else 20
        total = args.total_seeds if args.total_seeds is not None else 10 * m
        frame = run_competition(config, graph_from_config(config), args.s_values, m, total)
        return self._report(frame, config, args)

    def _cmd_exp_prob(self, config: Config, args: argparse.Namespace) -> str:
        """Handle exp-prob command."""
        m = args.m if args.m is not None else 20
        frame = run_relative_payoff(config, graph_from_config(config), args.p_values, m)
        return self._report(frame, config, args)

    def _cmd_exp_scale(self, config: Config, args: argparse.Namespace) -> str:
        """Handle exp-scale command."""
        frame = run_scalability(config, graph_from_config(config), args.m_values, args.threads_list)
        return self._report(frame, config, args)
