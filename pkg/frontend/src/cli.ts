import { loadJob, runExport } from './export.js'

async function main() {
  let jobPath = process.argv[2]
  if (!jobPath) {
    console.error('usage: node dist/cli.js <job.json>')
    process.exitCode = 2
    return
  }
  let job = loadJob(jobPath)
  let report = runExport(job)
  console.log(`wrote ${report.frameTensors.length} frame embedding tensors`)
  console.log(`wrote label embeddings: ${report.labelTensors.join(', ')}`)
  if (report.maskFile) {
    console.log(`wrote ${report.maskCount} mask records to ${report.maskFile}`)
  }
}

main().catch(e => {
  console.error(e instanceof Error ? e.message : e)
  process.exitCode = 1
})
