"""
Commande de rapport sur un schéma de PIR à deux serveurs
"""
from privcache.cli import cmd_pir
from privcache.export import ExportService
from privcache.management.base import PrivcacheCommand


class Command(PrivcacheCommand):
    help = 'Coûts, confidentialité, UDIQ, ensembles de récupération et bornes d\'un schéma PIR'
    command_name = 'pir'

    def add_arguments(self, parser):
        self.add_common_arguments(parser, 'scheme', 'N', 'q')
        parser.add_argument(
            '--transcripts',
            type=str,
            help='Fichier JSON des transcriptions (d, r, Q1, Q2)',
        )

    def run(self, options):
        config = self.build_config(options, 'scheme', 'N', 'q', 'transcripts')
        report = cmd_pir(config)

        costs = report['costs']
        self.stdout.write(f"(R_D1, R_D2, F') = ({costs['R_D1']}, {costs['R_D2']}, {costs['subpacketization']})")
        self.stdout.write(f"pir_privacy: {report['pir_privacy']}")
        self.stdout.write(f"udiq: {report['udiq']['marginal']}")

        bound = report.get('lower_bound')
        if bound:
            status = 'tight' if bound['tight'] else ('ok' if bound['passes'] else 'violated')
            self.stdout.write(f"lower_bound: {bound['lhs_min']} ({status})")
        else:
            self.stdout.write(f"lower_bound: n/a ({report['recovery_sets']['reason']})")

        if not config.output:
            self.stdout.write(ExportService.render_json(report), ending='')

        if report['pir_privacy'] != 'pass':
            return f"{report['scheme']}: confidentialité PIR en échec"
        return None
