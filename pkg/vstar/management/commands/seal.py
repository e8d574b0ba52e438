from pathlib import Path

from vstar.conf import vstar_settings
from vstar.exceptions import SealError
from vstar.seal import ImageRef, ScriptedVqa, crop_pixels, render_vwm_prompt, seal_answer
from vstar.serializers import ProjectionChoiceSerializer, VisualWorkingMemorySerializer
from vstar.storage import dump_trace, read_json, write_json

from ._base import VStarCommand


class Command(VStarCommand):
    help = 'Answers a question about an image, searching for the targets it needs first'
    backend_arguments = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--question', required=True)
        parser.add_argument('--target', action='append', default=[], dest='targets',
                            help='Target the scripted VQA model asks for; repeatable.')
        parser.add_argument('--answer', default='', help='Answer of the scripted VQA model.')
        parser.add_argument('--vqa-script', help='JSON file {"targets": [...], "answer": "..."}.')
        parser.add_argument('--crop-margin', type=float, default=None)
        parser.add_argument('--concurrent', action='store_true',
                            help='Search for the targets in parallel.')
        parser.add_argument('--single-target-variant', action='store_true',
                            help='Use the training-time projection rule.')
        parser.add_argument('--out-trace', help='Also write the search traces to this file.')
        parser.add_argument('--dump-prompt', action='store_true',
                            help='Print the rendered prompt to stdout.')

    def _vqa(self, options):
        if options.get('vqa_script'):
            script = read_json(options['vqa_script'])
            if not isinstance(script, dict):
                raise self.usage_error(f"{options['vqa_script']}: expected a JSON object")
            return ScriptedVqa(script.get('targets', []), script.get('answer', ''))
        return ScriptedVqa(options['targets'], options['answer'])

    def _write_traces(self, path, config, traces):
        if path:
            path = write_json({'config': config, 'traces': traces}, path)
            self.stdout.write(f'Traces written to {path}')

    def run(self, **options):
        params = self.search_params(options)
        backend, root = self.build_backend(options)
        vqa = self._vqa(options)
        image_path = options.get('image')
        image = ImageRef(Path(image_path).name if image_path else 'scene', root, image_path)
        margin = options['crop_margin']
        if margin is None:
            margin = vstar_settings.CROP_MARGIN
        out = self.out_dir(options)
        config = self.provenance(options, command='seal', question=options['question'],
                                 crop_margin=margin)

        try:
            result = seal_answer(
                vqa, backend, image, options['question'], params,
                crop_margin=margin,
                concurrent=options['concurrent'],
                single_target_variant=options['single_target_variant'],
            )
        except SealError as exc:
            traces = [dump_trace(t) for t in exc.traces]
            write_json({
                'config': config,
                'vwm': VisualWorkingMemorySerializer(exc.vwm).data,
                'traces': traces,
            }, out / 'seal.json')
            self._write_traces(options['out_trace'], config, traces)
            raise

        prompt = render_vwm_prompt(result.vwm)
        traces = [dump_trace(t) for t in result.traces]
        crops = []
        if image_path:
            for index, target in enumerate(result.vwm.present_targets):
                crops.append(str(crop_pixels(image, target.crop, out / 'crops' / f'{index:02d}_{target.name}.png')))

        write_json({
            'config': config,
            'response': result.response,
            'prompt': prompt,
            'vwm': VisualWorkingMemorySerializer(result.vwm).data,
            'projection': ProjectionChoiceSerializer(result.projection).data,
            'errors': result.errors,
            'crops': crops,
            'traces': traces,
        }, out / 'seal.json')
        (out / 'prompt.txt').write_text(prompt, encoding='utf-8')
        self._write_traces(options['out_trace'], config, traces)
        if options['dump_prompt']:
            self.stdout.write(prompt)

        found = len(result.vwm.present_targets)
        self.stdout.write(f'{found} of {len(result.vwm.searched_targets)} searched target(s) located')
        self.stdout.write(self.style.SUCCESS(f'Answer: {result.response}'))
