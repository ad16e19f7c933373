import argparse
import json
import logging
import os
import sys
import typing
from argparse import ArgumentParser
from fractions import Fraction

import yaml

from probstream import api
from probstream.automata.threshold import MODES
from probstream.core import GenerationError, ParameterError, ProbstreamError
from probstream.numerics import Probability
from probstream.protocols import GT_STRIDE
from probstream.serializer import FRACTION_PATTERN, format_text, get_json_encoder, get_yaml_dumper
from probstream.streamfile import StreamFile, parse_fraction, parse_stream, read_stream, write_stream

logging.basicConfig(stream=sys.stdout, format='%(message)s')
logging.getLogger('CONSOLE').setLevel(logging.INFO)
logging.getLogger('probstream').setLevel(logging.WARNING)

console = logging.getLogger('CONSOLE')
logger = logging.getLogger('probstream')


def ratio(value: str) -> Fraction:
    """Strict r/s argument, never a decimal."""
    if not FRACTION_PATTERN.match(value):
        raise argparse.ArgumentTypeError(f'expected r/s, got {value!r}')
    numerator, denominator = map(int, value.split('/'))
    if denominator == 0:
        raise argparse.ArgumentTypeError(f'{value} has a zero denominator')
    return Fraction(numerator, denominator)


def probability(value: str) -> Probability:
    """Strict r/s argument between 0 and 1."""
    try:
        return parse_fraction(value)
    except ValueError as error:
        raise argparse.ArgumentTypeError(str(error))


def _common_options() -> ArgumentParser:
    opts = ArgumentParser(add_help=False)

    input_opts = opts.add_argument_group('Input')
    input_opts.add_argument(
        '--input',
        dest='input',
        help='Stream file to read, standard input by default',
        type=str,
    )

    output_opts = opts.add_argument_group('Output')
    output_opts.add_argument(
        '--debug',
        action='store_true',
        dest='debug',
        help='Print information for debugging probstream and for reporting bugs.'
    )
    output_opts.add_argument(
        '-j',
        '--json',
        action='store_true',
        dest='json',
        help='Display output in json format'
    )
    output_opts.add_argument(
        '-y',
        '--yaml',
        action='store_true',
        dest='yaml',
        help='Display output in yaml format'
    )
    output_opts.add_argument(
        '-N',
        '--no-units',
        action='store_true',
        dest='no_units',
        help='Display bit counts without units'
    )
    output_opts.add_argument(
        '--digits',
        dest='digits',
        help='Significant digits of decimal renderings',
        type=int,
    )

    conf_opts = opts.add_argument_group('Configuration')
    conf_opts.add_argument(
        '--config',
        dest='config',
        help='YAML file merged on top of the packaged defaults',
        type=str,
    )

    return opts


def build_argument_parser() -> ArgumentParser:
    """Build the argument parser."""
    opts = ArgumentParser(prog='probstream', description='Streaming algorithms for products of probabilities.')
    common = _common_options()

    information_opts = opts.add_argument_group('Information')
    information_opts.add_argument(
        '--version',
        dest='version',
        action='store_true',
        help='Display probstream version.'
    )

    commands = opts.add_subparsers(dest='command', metavar='command')

    approx_opts = commands.add_parser('approx', parents=[common], help='Approximate the product of a stream')
    approx_opts.add_argument('--eps', dest='eps', required=True, type=ratio, help='Approximation error, r/s')
    approx_opts.add_argument('--n', dest='n', required=True, type=int, help='Maximum stream length')
    approx_opts.add_argument('--b', dest='b', required=True, type=int, help='Maximum element bit size')
    approx_opts.add_argument('--oracle', action='store_true', dest='oracle', help='Check against the exact product')

    threshold_opts = commands.add_parser('threshold', parents=[common], help='Compare a product with a threshold')
    threshold_opts.add_argument('--n', dest='n', required=True, type=int, help='Maximum elements after the threshold')
    threshold_opts.add_argument('--b', dest='b', required=True, type=int, help='Maximum element bit size')
    threshold_opts.add_argument('--mode', dest='mode', default='primes', choices=MODES, help='What the state keeps')
    threshold_opts.add_argument('--threshold', dest='threshold', type=probability,
                                help='Threshold, instead of the first element of the stream')
    threshold_opts.add_argument('--copies', dest='copies', type=int, help='Odd number of amplified noisy copies')
    threshold_opts.add_argument('--noise', dest='noise', type=probability, help='Flip probability of every copy')
    threshold_opts.add_argument('--oracle', action='store_true', dest='oracle', help='Check against the exact product')

    window_opts = commands.add_parser('window', parents=[common], help='Approximate the product of a sliding window')
    window_opts.add_argument('--eps', dest='eps', required=True, type=ratio, help='Approximation error, r/s')
    window_opts.add_argument('--m', dest='m', required=True, type=int, help='Window size')
    window_opts.add_argument('--b', dest='b', required=True, type=int, help='Maximum element bit size')
    window_opts.add_argument('--trace', action='store_true', dest='trace', help='Report every step')
    window_opts.add_argument('--oracle', action='store_true', dest='oracle', help='Check every window exactly')

    gen_opts = commands.add_parser('gen', parents=[common], help='Generate adversarial streams')
    gen_opts.add_argument('--family', dest='family', required=True, choices=api.FAMILIES, help='Stream family')
    gen_opts.add_argument('--eps', dest='eps', type=ratio, help='Approximation error of the bucket families')
    gen_opts.add_argument('--n', dest='n', default=1, type=int, help='Length budget or word length')
    gen_opts.add_argument('--b', dest='b', default=1, type=int, help='Bit size')
    gen_opts.add_argument('--j', dest='j', default=0, type=int, help='Target bucket of the bucket family')
    gen_opts.add_argument('--stride', dest='stride', default=GT_STRIDE, type=int, help='Bucket stride of appfool')
    gen_opts.add_argument('--gamma', dest='gamma', type=ratio, help='Bit budget slack of the primes family')
    gen_opts.add_argument('--out', dest='out', type=str,
                          help='Output file, or directory for multi-file families; standard output by default')

    protocol_opts = commands.add_parser('protocol', parents=[common], help='Simulate a one-way protocol')
    protocol_opts.add_argument('--reduction', dest='reduction', required=True, choices=api.REDUCTIONS,
                               help='Reduction to simulate')
    protocol_opts.add_argument('--eps', dest='eps', type=ratio, help='Approximation error')
    protocol_opts.add_argument('--n', dest='n', type=int, help='Length budget or word length')
    protocol_opts.add_argument('--m', dest='m', type=int, help='Window size')
    protocol_opts.add_argument('--b', dest='b', type=int, help='Bit size')
    protocol_opts.add_argument('--i', dest='i', type=int, help='Alice index or rank, Bob index for igt-swapp')
    protocol_opts.add_argument('--j', dest='j', type=int, help='Bob index or rank')
    protocol_opts.add_argument('--a', dest='a', type=probability, help='Bob value for igt-swapp')
    protocol_opts.add_argument('--alice', dest='alice', nargs='+', type=probability, help='Alice word for igt-swapp')
    protocol_opts.add_argument('--mode', dest='mode', default='primes', choices=MODES, help='Threshold mode')
    protocol_opts.add_argument('--naive', action='store_true', dest='naive', help='Use the naive window automaton')
    protocol_opts.add_argument('--sweep', action='store_true', dest='sweep', help='Run every input')
    protocol_opts.add_argument('--trace', action='store_true', dest='trace', help='List every sweep transcript')
    protocol_opts.add_argument('--workers', dest='workers', type=int, help='Threads used by the sweep')

    return opts


def read_input(options: argparse.Namespace) -> StreamFile:
    """Read the stream file named by --input, or standard input."""
    if options.input and options.input != '-':
        return read_stream(options.input)
    return parse_stream(sys.stdin)


def _as_yaml(
        info: typing.Mapping[str, typing.Any],
        context: typing.Mapping,
) -> str:
    """Convert info to string using YAML format."""
    return yaml.dump(
        info,
        Dumper=get_yaml_dumper(context),
        default_flow_style=False,
        allow_unicode=True,
        sort_keys=False,
    )


def _as_json(
        info: typing.Mapping[str, typing.Any],
        context: typing.Mapping,
) -> str:
    """Convert info to string using JSON format."""
    return json.dumps(
        info,
        cls=get_json_encoder(context),
        indent=4,
        ensure_ascii=False,
    )


def dumps(
        info: typing.Mapping[str, typing.Any],
        options: argparse.Namespace,
        context: typing.Mapping,
) -> str:
    """Convert info to string using text, json or yaml format."""
    if options.yaml:
        return _as_yaml(info, context)
    if options.json:
        return _as_json(info, context)
    return format_text(info)


def failures(report: typing.Mapping[str, typing.Any]) -> typing.List[str]:
    """Return one ``FAIL`` line per failed oracle check."""
    oracle = report.get('oracle')
    if not oracle or oracle['pass']:
        return []
    subject = report.get('algorithm') or report.get('reduction')
    details = []
    if oracle.get('failed_steps'):
        details.append('steps=' + ','.join(map(str, oracle['failed_steps'])))
    if oracle.get('failures'):
        details.append(f'failures={oracle["failures"]}')
    return [
        ' '.join([f'FAIL check={name} subject={subject}'] + details)
        for name, passed in oracle['checks'].items() if not passed
    ]


def _emit(report: typing.Mapping[str, typing.Any], options: argparse.Namespace, context: typing.Mapping) -> int:
    console.info(dumps(report, options, context))
    lines = failures(report)
    for line in lines:
        console.info(line)
    return 1 if lines else 0


def _kwargs(options: argparse.Namespace, **names: str) -> typing.Dict[str, typing.Any]:
    values = {name: getattr(options, attr) for name, attr in names.items()}
    return {name: value for name, value in values.items() if value is not None}


def run_approx(options: argparse.Namespace, context: typing.MutableMapping) -> int:
    stream = read_input(options)
    if stream.threshold is not None:
        raise ParameterError('the !threshold directive is only read by the threshold command')
    report = api.approx(stream.elements, options.eps, options.n, options.b, context=context)
    return _emit(report, options, context)


def run_threshold(options: argparse.Namespace, context: typing.MutableMapping) -> int:
    stream = read_input(options)
    if options.threshold is not None:
        if stream.threshold is not None:
            raise ParameterError('threshold given both by --threshold and by the stream header')
        elements = (options.threshold,) + stream.elements
    else:
        elements = stream.threshold_stream()
    report = api.threshold(elements, options.n, options.b, context=context, mode=options.mode,
                           copies=options.copies, noise=options.noise)
    return _emit(report, options, context)


def run_window(options: argparse.Namespace, context: typing.MutableMapping) -> int:
    stream = read_input(options)
    if stream.threshold is not None:
        raise ParameterError('the !threshold directive is only read by the threshold command')
    report = api.window(stream.elements, options.eps, options.m, options.b, context=context)
    return _emit(report, options, context)


def run_gen(options: argparse.Namespace, context: typing.MutableMapping) -> int:
    family = 'bucket' if options.family == 'claim1' else options.family
    report, files = api.generate(
        family,
        context=context,
        **_kwargs(options, epsilon='eps', n='n', b='b', j='j', stride='stride', gamma='gamma'),
    )
    if not options.out:
        # keep standard output a valid stream file
        console.info('\n'.join(f'# {line}' for line in format_text(report).splitlines()))
        for name, text in files:
            if len(files) > 1:
                console.info('# ==> %s <==', name)
            console.info(text.rstrip('\n'))
        return 0

    if len(files) == 1 and not os.path.isdir(options.out):
        paths = [options.out]
        write_stream(options.out, files[0][1])
    else:
        os.makedirs(options.out, exist_ok=True)
        paths = []
        for name, text in files:
            paths.append(os.path.join(options.out, name))
            write_stream(paths[-1], text)
    logger.debug('Wrote %d stream files', len(paths))
    return _emit(dict(report, files=paths), options, context)


def run_protocol(options: argparse.Namespace, context: typing.MutableMapping) -> int:
    report = api.protocol(
        options.reduction,
        context=context,
        alice=options.alice or (),
        mode=options.mode,
        naive=options.naive,
        sweep=options.sweep,
        **_kwargs(options, epsilon='eps', n='n', m='m', b='b', i='i', j='j', a='a'),
    )
    return _emit(report, options, context)


COMMANDS: typing.Dict[str, typing.Callable[[argparse.Namespace, typing.MutableMapping], int]] = {
    'approx': run_approx,
    'threshold': run_threshold,
    'window': run_window,
    'gen': run_gen,
    'protocol': run_protocol,
}


def main(args: typing.Optional[typing.List[str]] = None) -> int:
    """Execute main function for entry point."""
    argument_parser = build_argument_parser()
    args = args if args is not None else sys.argv[1:]
    options = argument_parser.parse_args(args)

    if getattr(options, 'debug', False):
        logger.setLevel(logging.DEBUG)
    else:
        logger.setLevel(logging.WARNING)

    if options.version:
        console.info(api.debug_info())
        return 0
    if not options.command:
        argument_parser.print_help()
        return 0

    context = {k: v for k, v in vars(options).items() if v is not None}
    try:
        return COMMANDS[options.command](options, context)
    except GenerationError as error:
        console.info('FAIL check=generation %s', error)
        return 1
    except ProbstreamError as error:
        logger.error('%s', error)
    except OSError:
        logger.exception('OS error when reading or writing streams')
    except UnicodeError:
        logger.exception('Character encoding error when reading the stream')
    except api.ProbstreamException as e:
        logger.error(e)
    return 2


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
