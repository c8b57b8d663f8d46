from vqtk.cli.commands import codebook, demo, evaluate, ngram, project, sweep, tokenize


def register_commands(subparsers, parents) -> None:
    codebook.register(subparsers, parents)
    tokenize.register(subparsers, parents)
    evaluate.register(subparsers, parents)
    ngram.register(subparsers, parents)
    sweep.register(subparsers, parents)
    demo.register(subparsers, parents)
    project.register(subparsers, parents)
