"""
Commande de calcul des courbes mémoire-charge
"""
from privcache.caching import TRADEOFF_GENERATORS
from privcache.cli import cmd_tradeoff
from privcache.management.base import PrivcacheCommand


class Command(PrivcacheCommand):
    help = "Calcule l'enveloppe convexe inférieure des points (M, R) d'un générateur"
    command_name = 'tradeoff'

    def add_arguments(self, parser):
        self.add_common_arguments(parser, 'scheme', 'N', 'K', 't', 'q', 'mu')
        parser.add_argument(
            '--generator',
            type=str,
            choices=list(TRADEOFF_GENERATORS),
            help='Générateur de points',
        )
        parser.add_argument(
            '--symbol-len',
            dest='symbol_len',
            type=int,
            help='Longueur des messages (contrôle de divisibilité du partage de temps)',
        )
        parser.add_argument(
            '--format',
            type=str,
            choices=['csv', 'json'],
            help='Format de sortie (csv par défaut)',
        )

    def run(self, options):
        config = self.build_config(
            options, 'scheme', 'N', 'K', 't', 'q', 'mu', 'generator', 'symbol_len', 'format'
        )
        content = cmd_tradeoff(config)
        if config.output:
            self.stdout.write(self.style.SUCCESS(f'Courbe écrite dans {config.output}'))
        else:
            self.stdout.write(content, ending='')
