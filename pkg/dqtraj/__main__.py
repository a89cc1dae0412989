""" ``python -m dqtraj`` """
from .cli import main

if __name__ == '__main__':
    # pylint:disable=no-value-for-parameter,unexpected-keyword-arg
    main(prog_name='dqtraj')
