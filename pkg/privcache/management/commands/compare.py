"""
Commande de comparaison des courbes utilisateurs virtuels / composition PIR
"""
from privcache.cli import cmd_compare
from privcache.management.base import PrivcacheCommand


class Command(PrivcacheCommand):
    help = 'Compare la courbe des utilisateurs virtuels et celle de la composition PIR (CSV)'
    command_name = 'compare'

    def add_arguments(self, parser):
        self.add_common_arguments(parser, 'N', 'K')
        parser.add_argument(
            '--format',
            type=str,
            choices=['csv', 'json'],
            help='Format de sortie (csv par défaut)',
        )

    def run(self, options):
        config = self.build_config(options, 'N', 'K', 'format')
        rows, content = cmd_compare(config)
        if config.output:
            self.stdout.write(self.style.SUCCESS(f'{len(rows)} points écrits dans {config.output}'))
        else:
            self.stdout.write(content, ending='')
