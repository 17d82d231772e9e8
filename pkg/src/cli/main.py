"""
softsed 命令行入口

    softsed [通用参数] <子命令> [子命令参数]

通用参数: --config / --seed / --log-level / --work-dir / --workers。
配置优先级: 内置默认值 < YAML 配置文件 < .env < SOFTSED_* 环境变量 < 命令行参数。

退出码: 0 成功，1 未预期的错误，2 用法错误，3 数据错误，4 数值错误。
失败时 stderr 输出一行 error\\tcode=<n>\\tstage=<stage>\\tmessage=<text>。
"""

import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

from ..core.config import Config, setup_config
from ..core.errors import SoftSedError, UsageError
from ..core.output_formatter import ReportFormatter
from ..core.setups import RunStatus, TrainingSetup
from ..runner.run_manager import RunManager
from ..runner.stages import PipelineStages
from ..schemas.common import ErrorResponse

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


class _Parser(argparse.ArgumentParser):
    """用法错误抛出 UsageError，由 main 统一转换为退出码 2"""

    def error(self, message: str):
        raise UsageError(message)


def _setup_list(value: str) -> List[TrainingSetup]:
    try:
        return [TrainingSetup(v.strip().upper()) for v in value.split(',') if v.strip()]
    except ValueError:
        choices = ', '.join(s.value for s in TrainingSetup)
        raise argparse.ArgumentTypeError(f"unknown setup in '{value}' (choose from {choices})") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='softsed', description='Soft-label sound event detection toolkit')
    parser.add_argument('--config', help='YAML configuration file')
    parser.add_argument('--seed', type=int, help='64-bit random seed (overrides config)')
    parser.add_argument('--log-level', help='logging level: DEBUG, INFO, WARNING, ERROR')
    parser.add_argument('--work-dir', help='working directory for default artifact paths')
    parser.add_argument('--workers', type=int, default=1, help='threads for per-recording work')
    parser.add_argument('--quiet', action='store_true', help='do not print stage summaries')

    commands = parser.add_subparsers(dest='command', metavar='<command>', parser_class=_Parser)
    commands.required = True

    sim = commands.add_parser('simulate', help='simulate truth, weak annotations and features')
    sim.add_argument('--recordings', type=int, help='number of recordings')
    sim.add_argument('--duration', type=int, help='recording duration in seconds')
    sim.add_argument('--annotators', type=int, help='annotator pool size')
    sim.add_argument('--k', type=int, help='annotators per window')
    sim.add_argument('--scene', help='scene name')

    est = commands.add_parser('estimate-competence', help='estimate annotator competence with EM')
    est.add_argument('--iterations', type=int, help='EM iterations per restart')
    est.add_argument('--restarts', type=int, help='number of random restarts')
    est.add_argument('--smoothing', type=float, help='Beta prior smoothing')
    est.add_argument('--per-scene', action='store_true', default=None, help='estimate one table per scene')
    est.add_argument('--annotations', help='annotation directory')
    est.add_argument('--output', help='competence table path')

    agg = commands.add_parser('aggregate', help='aggregate weak annotations into soft labels')
    agg.add_argument('--uniform', action='store_true', help='ignore competence, weight annotators equally')
    agg.add_argument('--dedup', action='store_true', default=None, help='merge repeated opinions of an annotator')
    agg.add_argument('--annotations', help='annotation directory')
    agg.add_argument('--competence', help='competence table path')
    agg.add_argument('--output', help='soft label directory')

    binz = commands.add_parser('binarize', help='convert soft labels to hard-label events')
    group = binz.add_mutually_exclusive_group()
    group.add_argument('--threshold', type=float, help='single threshold for every class')
    group.add_argument('--class-thresholds', help='threshold table file')
    binz.add_argument('--input', help='soft label directory')
    binz.add_argument('--output', help='hard label directory')

    thr = commands.add_parser('thresholds', help='derive class thresholds from training soft labels')
    thr.add_argument('--method', choices=['FIXED_0.5', 'TRIMMED_MIDRANGE'], help='threshold method')
    thr.add_argument('--trim', type=float, help='fraction trimmed from each end')
    thr.add_argument('--output', help='threshold table path')

    ext = commands.add_parser('extract-features', help='compute log-mel features from WAV files')
    ext.add_argument('--audio', help='WAV directory')
    ext.add_argument('--output', help='feature directory')

    for name, text in (('train', 'train classifiers'), ('predict', 'write system scores'),
                       ('evaluate', 'evaluate predictions and write the report')):
        sub = commands.add_parser(name, help=text)
        sub.add_argument('--setups', type=_setup_list, help='comma-separated training setups')
        if name == 'train':
            sub.add_argument('--epochs', type=int, help='training epochs')
            sub.add_argument('--learning-rate', type=float, help='Adam learning rate')
        if name == 'evaluate':
            sub.add_argument('--reference', help='hard-label reference directory (file mode)')
            sub.add_argument('--system', help='hard-label system directory (file mode)')

    commands.add_parser('pipeline', help='run every stage on simulated data and write the report')

    stats = commands.add_parser('stats', help='count hard-label event instances per scene and class')
    stats.add_argument('labels', help='directory of hard-label files (scene subdirectories allowed)')
    stats.add_argument('--scene', help='scene of every file in the directory')

    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """命令行参数 -> 点分配置路径"""
    get = lambda name: getattr(args, name, None)
    overrides = {
        'seed': args.seed,
        'log_level': args.log_level,
        'paths.work_dir': args.work_dir,
        'competence.workers': args.workers if args.workers > 1 else None,
        'simulator.n_recordings': get('recordings'),
        'simulator.duration': get('duration'),
        'simulator.n_annotators': get('annotators'),
        'simulator.annotators_per_window': get('k'),
        'simulator.scene': get('scene') if args.command == 'simulate' else None,
        'competence.iterations': get('iterations'),
        'competence.restarts': get('restarts'),
        'competence.smoothing': get('smoothing'),
        'competence.per_scene': get('per_scene'),
        'aggregation.weighting': 'uniform' if get('uniform') else None,
        'aggregation.dedup_annotators': get('dedup'),
        'paths.competence_file': get('competence'),
        'thresholds.method': get('method'),
        'thresholds.trim': get('trim'),
        'training.epochs': get('epochs'),
        'training.learning_rate': get('learning_rate'),
    }
    if get('annotations'):
        overrides['paths.annotations_dir'] = args.annotations
    if get('audio'):
        overrides['paths.audio_dir'] = args.audio
    output_key = {
        'estimate-competence': 'paths.competence_file',
        'aggregate': 'paths.soft_labels_dir',
        'thresholds': 'paths.thresholds_file',
        'extract-features': 'paths.features_dir',
    }.get(args.command)
    if output_key and get('output'):
        overrides[output_key] = args.output
    return {k: v for k, v in overrides.items() if v is not None}


def configure_logging(level: str) -> None:
    """根 logger 只配置一次，输出到 stderr"""
    numeric = logging.getLevelName(str(level).upper())
    if not isinstance(numeric, int):
        raise UsageError(f"unknown log level '{level}'")
    logging.basicConfig(level=numeric, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _dispatch(args: argparse.Namespace, stages: PipelineStages) -> Callable[[], List]:
    command = args.command
    setups = getattr(args, 'setups', None)
    if command == 'simulate':
        return stages.simulate
    if command == 'estimate-competence':
        return stages.estimate_competence
    if command == 'aggregate':
        return stages.aggregate
    if command == 'binarize':
        return lambda: stages.binarize(
            threshold=args.threshold, thresholds_file=args.class_thresholds,
            input_dir=args.input, output_dir=args.output,
        )
    if command == 'thresholds':
        return stages.thresholds
    if command == 'extract-features':
        return stages.extract_features
    if command == 'train':
        return lambda: stages.train(setups)
    if command == 'predict':
        return lambda: stages.predict(setups)
    if command == 'evaluate':
        if args.reference or args.system:
            if not (args.reference and args.system):
                raise UsageError("--reference and --system must be given together")
            return lambda: stages.evaluate_files(args.reference, args.system)
        return lambda: stages.evaluate(setups)
    if command == 'stats':
        return lambda: stages.stats(args.labels, scene=args.scene)
    raise UsageError(f"unknown command '{command}'")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    执行一条命令

    Returns:
        退出码
    """
    stage = "cli"
    manager: Optional[RunManager] = None
    try:
        args = build_parser().parse_args(argv)
        stage = args.command
        ReportFormatter.PRINT_ENABLED = not args.quiet

        Config.reset()
        config = setup_config(args.config, overrides=_overrides(args))
        pipeline = config.pipeline
        configure_logging(pipeline.log_level)

        manager = RunManager(workers=args.workers)
        stages = PipelineStages(pipeline, config.config_hash(), manager)
        if args.command == 'pipeline':
            stages.run_pipeline()
        else:
            manager.run_stage(args.command, _dispatch(args, stages))
        return 0
    except SoftSedError as e:
        return _report_failure(manager, stage, e.exit_code, e.message)
    except Exception as e:
        logger.exception(f"Unexpected failure in '{stage}'")
        return _report_failure(manager, stage, SoftSedError.exit_code, f"{type(e).__name__}: {e}")


def _report_failure(manager: Optional[RunManager], stage: str, code: int, message: str) -> int:
    """在 stderr 写出单行错误并返回退出码"""
    failed = [r.stage for r in (manager.results() if manager else []) if r.status is RunStatus.FAILED]
    error = ErrorResponse(code=code, stage=failed[-1] if failed else stage, error=message)
    print(error.to_line(), file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == '__main__':
    main()
